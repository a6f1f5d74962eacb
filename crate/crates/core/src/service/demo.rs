//! A small seeded scenario: an LGPL-2.1 C library and a derivative that
//! copies it.

use super::{Platform, ServiceError, UploadRequest, UploadVerdict};
use crate::codescan::build_zip;
use crate::contracts::ProjectId;
use crate::licensing::LicenseId;
use crate::registry::WalletBook;

pub const DEMO_WALLETS: [(&str, &str); 2] =
    [("alice", "0xa11ce00000000000000000000000000000000001"), ("bob", "0xb0b0000000000000000000000000000000000002")];

const LIST_C: &str = r#"#include <stdlib.h>
#include "list.h"

int list_len(struct node *head) {
    int n = 0;
    while (head) { n++; head = head->next; }
    return n;
}

void list_free(struct node *head) {
    while (head) { struct node *next = head->next; free(head); head = next; }
}

int list_sum(struct node *head) {
    int total = 0;
    for (; head; head = head->next) total += head->value;
    return total;
}
"#;

const LIST_H: &str = r#"struct node { int value; struct node *next; };
int list_len(struct node *head);
void list_free(struct node *head);
int list_sum(struct node *head);
"#;

const MAIN_C: &str = r#"#include <stdio.h>
#include "list.h"

int main(int argc, char **argv) {
    struct node b = { 2, 0 };
    struct node a = { 1, &b };
    printf("%d %d\n", list_len(&a), list_sum(&a));
    return 0;
}
"#;

pub fn demo_wallets() -> WalletBook {
    WalletBook::from_entries(DEMO_WALLETS.iter().map(|(u, w)| ((*u).to_owned(), w.parse().expect("demo wallet"))))
}

pub fn demo_original_files() -> Vec<(&'static str, &'static [u8])> {
    vec![("tinylist/list.c", LIST_C.as_bytes()), ("tinylist/list.h", LIST_H.as_bytes())]
}

/// The original library copied verbatim plus a new program using it.
pub fn demo_derivative_files() -> Vec<(&'static str, &'static [u8])> {
    vec![
        ("listdemo/vendor/list.c", LIST_C.as_bytes()),
        ("listdemo/vendor/list.h", LIST_H.as_bytes()),
        ("listdemo/main.c", MAIN_C.as_bytes()),
    ]
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub original: ProjectId,
    pub download_block: u64,
    pub rejected: UploadVerdict,
    pub accepted: UploadVerdict,
}

/// alice publishes the library under LGPL-2.1, bob downloads it, tries to
/// publish a derivative under Apache-2.0 and then under LGPL-2.1.
pub fn seed_demo(platform: &Platform) -> Result<DemoOutcome, ServiceError> {
    let zip = |files: Vec<(&str, &[u8])>| build_zip(files).expect("in-memory zip");
    let original = match platform.upload_workflow(UploadRequest {
        username: "alice".into(),
        archive: zip(demo_original_files()),
        name: "tinylist".into(),
        description: "Singly linked list helpers".into(),
        license: LicenseId::Lgpl21,
        parents: vec![],
    })? {
        UploadVerdict::Accepted { project_id, .. } => project_id,
        other => return Err(ServiceError::InvalidInput(format!("demo seed rejected: {other:?}"))),
    };
    let download_block = platform.download_workflow("bob", &original)?.agreement_block;
    let derivative = |license| UploadRequest {
        username: "bob".into(),
        archive: zip(demo_derivative_files()),
        name: "listdemo".into(),
        description: "Command-line demo built on tinylist".into(),
        license,
        parents: vec![original.clone()],
    };
    let rejected = platform.upload_workflow(derivative(LicenseId::Apache20))?;
    let accepted = platform.upload_workflow(derivative(LicenseId::Lgpl21))?;
    Ok(DemoOutcome { original, download_block, rejected, accepted })
}
