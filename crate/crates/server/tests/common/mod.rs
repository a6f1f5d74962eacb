#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use licensechain::ledger::ManualClock;
use licensechain::licensing::CompatibilityMatrix;
use licensechain::service::{demo_wallets, Platform, PlatformConfig};

pub struct TestServer {
    pub base: String,
    pub platform: Arc<Platform>,
    _task: tokio::task::JoinHandle<()>,
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }
}

pub fn open_platform(dir: &Path) -> Arc<Platform> {
    Arc::new(
        Platform::open(
            dir,
            demo_wallets(),
            Arc::new(CompatibilityMatrix::shipped()),
            PlatformConfig::default(),
            Arc::new(ManualClock::new(1_700_000_000)),
        )
        .expect("platform opens"),
    )
}

/// Serves `platform` on an ephemeral localhost port.
pub async fn spawn(platform: Arc<Platform>) -> TestServer {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = licensechain_server::router(platform.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    TestServer { base: format!("http://{addr}"), platform, _task: task }
}

pub fn upload_form(archive: Vec<u8>, name: &str, license: &str, parents: &[&str]) -> reqwest::multipart::Form {
    let part = reqwest::multipart::Part::bytes(archive).file_name("upload.zip").mime_str("application/zip").unwrap();
    let mut form = reqwest::multipart::Form::new()
        .part("archive", part)
        .text("name", name.to_owned())
        .text("description", format!("{name} test upload"))
        .text("license", license.to_owned());
    for p in parents {
        form = form.text("parents[]", (*p).to_owned());
    }
    form
}
