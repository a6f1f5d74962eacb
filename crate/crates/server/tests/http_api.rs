mod common;

use common::{open_platform, spawn, upload_form};
use licensechain::codescan::build_zip;
use licensechain::service::{demo_derivative_files, demo_original_files};
use serde_json::Value;

fn original_zip() -> Vec<u8> {
    build_zip(demo_original_files()).unwrap()
}

#[tokio::test]
async fn upload_download_and_browse() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(open_platform(dir.path())).await;
    let http = reqwest::Client::new();

    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "alice")
        .multipart(upload_form(original_zip(), "tinylist", "LGPL-2.1", &[]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 201);
    let body: Value = res.json().await.unwrap();
    assert_eq!(body["outcome"], "accepted");
    assert_eq!(body["project_id"], "proj-1");

    let list: Value = http.get(server.url("/api/projects?query=tiny")).send().await.unwrap().json().await.unwrap();
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["license"], "LGPL-2.1");
    let none: Value = http.get(server.url("/api/projects?query=zzz")).send().await.unwrap().json().await.unwrap();
    assert!(none.as_array().unwrap().is_empty());

    let record: Value = http.get(server.url("/api/projects/proj-1")).send().await.unwrap().json().await.unwrap();
    assert_eq!(record["chain_ref"], 1);
    assert_eq!(record["language_mix"]["C"], 2);

    let res = http.post(server.url("/api/projects/proj-1/download")).header("X-User", "bob").send().await.unwrap();
    assert_eq!(res.status(), 200);
    assert_eq!(res.headers()["content-type"], "application/zip");
    assert_eq!(res.headers()["x-agreement-block"], "2");
    assert_eq!(res.bytes().await.unwrap().to_vec(), original_zip());

    let chain: Value = http.get(server.url("/api/chain")).send().await.unwrap().json().await.unwrap();
    let blocks = chain.as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    assert_eq!(blocks[2]["tx"]["type"], "download_agreement");
    assert_eq!(blocks[2]["tx"]["license"], "LGPL-2.1");
    let verify: Value = http.get(server.url("/api/chain/verify")).send().await.unwrap().json().await.unwrap();
    assert_eq!(verify["valid"], true);
}

#[tokio::test]
async fn conflict_is_409_with_suggestions() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(open_platform(dir.path())).await;
    let http = reqwest::Client::new();
    let post = |user: &'static str, zip: Vec<u8>, license: &'static str| {
        http.post(server.url("/api/projects"))
            .header("X-User", user)
            .multipart(upload_form(zip, "p", license, &[]))
            .send()
    };
    assert_eq!(post("alice", original_zip(), "GPL-3.0").await.unwrap().status(), 201);
    let derivative = build_zip(demo_derivative_files()).unwrap();
    let res = post("bob", derivative.clone(), "MIT").await.unwrap();
    assert_eq!(res.status(), 409);
    let body: Value = res.json().await.unwrap();
    assert_eq!(body["outcome"], "conflict");
    assert_eq!(body["conflicts"][0]["origin_license"], "GPL-3.0");
    assert_eq!(body["conflicts"][0]["matched_hash_count"], 3);
    assert_eq!(body["suggestions"], serde_json::json!(["GPL-3.0", "AGPL-3.0"]));
    assert_eq!(post("bob", derivative, "AGPL-3.0").await.unwrap().status(), 201);
}

#[tokio::test]
async fn request_errors() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(open_platform(dir.path())).await;
    let http = reqwest::Client::new();

    let res = http
        .post(server.url("/api/projects"))
        .multipart(upload_form(original_zip(), "p", "MIT", &[]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 401);
    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "mallory")
        .multipart(upload_form(original_zip(), "p", "MIT", &[]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 401);

    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "alice")
        .multipart(upload_form(original_zip(), "p", "WTFPL", &[]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 400);
    let body: Value = res.json().await.unwrap();
    assert!(body["error"].as_str().unwrap().contains("GPL-3.0-or-later"), "{body}");

    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "alice")
        .multipart(upload_form(b"not a zip".to_vec(), "p", "MIT", &[]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 400);

    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "alice")
        .multipart(upload_form(original_zip(), "p", "MIT", &["proj-7"]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 404);

    assert_eq!(http.get(server.url("/api/projects/proj-9")).send().await.unwrap().status(), 404);
    let res = http.post(server.url("/api/projects/proj-9/download")).header("X-User", "bob").send().await.unwrap();
    assert_eq!(res.status(), 404);

    // nothing above reached the chain
    assert_eq!(server.platform.contracts().chain().len(), 1);
}

#[tokio::test]
async fn license_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(open_platform(dir.path())).await;
    let http = reqwest::Client::new();
    let all: Value = http.get(server.url("/api/licenses")).send().await.unwrap().json().await.unwrap();
    let all = all.as_array().unwrap();
    assert_eq!(all.len(), 14);
    assert_eq!(all[0]["id"], "MIT");
    assert_eq!(all[0]["info_url"], "https://spdx.org/licenses/MIT.html");

    let lgpl: Value =
        http.get(server.url("/api/licenses/LGPL-2.1/compatible")).send().await.unwrap().json().await.unwrap();
    let compatible: Vec<&str> = lgpl["compatible"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(compatible.contains(&"LGPL-2.1"));
    assert!(!compatible.contains(&"Apache-2.0"));
    let res = http.get(server.url("/api/licenses/Beerware/compatible")).send().await.unwrap();
    assert_eq!(res.status(), 400);
}

#[tokio::test]
async fn parents_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn(open_platform(dir.path())).await;
    let http = reqwest::Client::new();
    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "alice")
        .multipart(upload_form(original_zip(), "base", "MIT", &[]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 201);
    let derivative = build_zip(demo_derivative_files()).unwrap();
    let res = http
        .post(server.url("/api/projects"))
        .header("X-User", "bob")
        .multipart(upload_form(derivative, "child", "GPL-2.0", &["proj-1"]))
        .send()
        .await
        .unwrap();
    assert_eq!(res.status(), 201);
    let record: Value = http.get(server.url("/api/projects/proj-2")).send().await.unwrap().json().await.unwrap();
    assert_eq!(record["parents"], serde_json::json!(["proj-1"]));
}
