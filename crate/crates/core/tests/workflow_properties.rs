use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use licensechain::codescan::{build_zip, scan_zip, ScanLimits};
use licensechain::contracts::ProjectId;
use licensechain::ledger::ManualClock;
use licensechain::licensing::{CompatibilityMatrix, LicenseId};
use licensechain::service::{demo_wallets, explain_match, Platform, PlatformConfig, UploadRequest, UploadVerdict};
use proptest::prelude::*;

fn function(origin: usize, j: usize) -> String {
    format!("int o{origin}_f{j}(int a) {{ return a + {}; }}\n", origin * 100 + j)
}

#[derive(Debug, Clone)]
struct Fixture {
    /// License and function count per origin project.
    origins: Vec<(LicenseId, usize)>,
    /// Which origin functions the derivative copies.
    copied: Vec<(usize, usize)>,
    fresh: usize,
}

fn fixture() -> impl Strategy<Value = Fixture> {
    let license = prop::sample::select(LicenseId::ALL.to_vec());
    prop::collection::vec((license, 1usize..4), 1..4)
        .prop_flat_map(|origins| {
            let slots: Vec<(usize, usize)> =
                origins.iter().enumerate().flat_map(|(i, (_, n))| (0..*n).map(move |j| (i, j))).collect();
            let n = slots.len();
            (Just(origins), prop::sample::subsequence(slots, 0..=n), 0usize..3)
        })
        .prop_map(|(origins, copied, fresh)| Fixture { origins, copied, fresh })
}

impl Fixture {
    fn origin_zip(&self, i: usize) -> Vec<u8> {
        let text: String = (0..self.origins[i].1).map(|j| function(i, j)).collect();
        build_zip([(format!("o{i}/lib.c").as_str(), text.as_bytes())]).unwrap()
    }

    fn derivative_zip(&self) -> Vec<u8> {
        let mut text: String = self.copied.iter().map(|(i, j)| function(*i, *j)).collect();
        for k in 0..self.fresh {
            text.push_str(&format!("double fresh_{k}(double x) {{ return x * {k}; }}\n"));
        }
        build_zip([("derived/main.c", text.as_bytes())]).unwrap()
    }

    fn matched_licenses(&self) -> Vec<LicenseId> {
        let origins: BTreeSet<usize> = self.copied.iter().map(|(i, _)| *i).collect();
        origins.into_iter().map(|i| self.origins[i].0).collect()
    }

    fn seeded(&self, platform: &Platform) -> Vec<ProjectId> {
        (0..self.origins.len())
            .map(|i| {
                match platform.upload_workflow(request("alice", self.origin_zip(i), self.origins[i].0, vec![])).unwrap()
                {
                    UploadVerdict::Accepted { project_id, .. } => project_id,
                    v => panic!("origin rejected: {v:?}"),
                }
            })
            .collect()
    }
}

fn request(user: &str, archive: Vec<u8>, license: LicenseId, parents: Vec<ProjectId>) -> UploadRequest {
    UploadRequest {
        username: user.into(),
        archive,
        name: "fixture".into(),
        description: String::new(),
        license,
        parents,
    }
}

fn platform() -> Platform {
    Platform::in_memory(
        demo_wallets(),
        Arc::new(CompatibilityMatrix::shipped()),
        PlatformConfig::default(),
        Arc::new(ManualClock::new(10)),
    )
    .unwrap()
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walk(root, root)
}

fn walk(root: &Path, dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let rel = p.strip_prefix(root).unwrap().to_path_buf();
        if p.is_dir() {
            out.insert(rel, Vec::new());
            out.extend(walk(root, &p));
        } else {
            out.insert(rel, std::fs::read(&p).unwrap());
        }
    }
    out
}

fn passes(m: &CompatibilityMatrix, origins: &[LicenseId], declared: LicenseId) -> bool {
    origins.iter().all(|&o| o == declared || m.is_compatible(o, declared))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdict_follows_the_matrix_and_is_deterministic(f in fixture(), declared in prop::sample::select(LicenseId::ALL.to_vec())) {
        let (a, b) = (platform(), platform());
        f.seeded(&a);
        f.seeded(&b);
        let va = a.upload_workflow(request("bob", f.derivative_zip(), declared, vec![])).unwrap();
        let vb = b.upload_workflow(request("bob", f.derivative_zip(), declared, vec![])).unwrap();
        prop_assert_eq!(&va, &vb);
        let m = CompatibilityMatrix::shipped();
        prop_assert_eq!(va.is_accepted(), passes(&m, &f.matched_licenses(), declared));
    }

    #[test]
    fn declared_parents_never_change_the_verdict(f in fixture(), declared in prop::sample::select(LicenseId::ALL.to_vec())) {
        let (with, without) = (platform(), platform());
        let ids = f.seeded(&with);
        f.seeded(&without);
        let v1 = with.upload_workflow(request("bob", f.derivative_zip(), declared, ids)).unwrap();
        let v2 = without.upload_workflow(request("bob", f.derivative_zip(), declared, vec![])).unwrap();
        prop_assert_eq!(v1, v2);
    }

    #[test]
    fn every_suggestion_is_accepted(f in fixture(), declared in prop::sample::select(LicenseId::ALL.to_vec())) {
        let p = platform();
        f.seeded(&p);
        if let UploadVerdict::Conflict { conflicts, suggestions } =
            p.upload_workflow(request("bob", f.derivative_zip(), declared, vec![])).unwrap()
        {
            prop_assert!(!conflicts.is_empty());
            prop_assert!(!suggestions.contains(&declared));
            let m = CompatibilityMatrix::shipped();
            let oracle: BTreeSet<LicenseId> =
                LicenseId::ALL.iter().copied().filter(|l| passes(&m, &f.matched_licenses(), *l)).collect();
            prop_assert_eq!(&suggestions, &oracle);
            for s in suggestions {
                let fresh = platform();
                f.seeded(&fresh);
                let v = fresh.upload_workflow(request("bob", f.derivative_zip(), s, vec![])).unwrap();
                prop_assert!(v.is_accepted(), "suggested {} rejected: {:?}", s, v);
            }
        }
    }

    #[test]
    fn conflicts_leave_disk_state_untouched(f in fixture(), declared in prop::sample::select(LicenseId::ALL.to_vec())) {
        let m = CompatibilityMatrix::shipped();
        prop_assume!(!passes(&m, &f.matched_licenses(), declared));
        let dir = tempfile::tempdir().unwrap();
        let p = Platform::open(
            dir.path(),
            demo_wallets(),
            Arc::new(m),
            PlatformConfig::default(),
            Arc::new(ManualClock::new(10)),
        )
        .unwrap();
        f.seeded(&p);
        let before = snapshot(dir.path());
        let v = p.upload_workflow(request("bob", f.derivative_zip(), declared, vec![])).unwrap();
        prop_assert!(!v.is_accepted());
        prop_assert_eq!(snapshot(dir.path()), before);
    }

    #[test]
    fn evidence_is_the_hash_intersection(f in fixture()) {
        let derived = scan_zip(&f.derivative_zip(), &ScanLimits::default()).unwrap();
        for i in 0..f.origins.len() {
            let origin = scan_zip(&f.origin_zip(i), &ScanLimits::default()).unwrap();
            let evidence = explain_match(&derived, &origin.hashes);
            let got: BTreeSet<_> = evidence.iter().map(|e| e.hash).collect();
            let want: BTreeSet<_> = derived.hashes.iter().copied().filter(|h| origin.hashes.contains(h)).collect();
            prop_assert_eq!(&got, &want);
            prop_assert!(evidence.iter().all(|e| e.file_path == "derived/main.c"));
            let copied = f.copied.iter().filter(|(o, _)| *o == i).count();
            prop_assert_eq!(got.len(), copied);
        }
    }
}

#[test]
fn registry_survives_restart_and_agrees_with_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let open = || {
        Platform::open(
            dir.path(),
            demo_wallets(),
            Arc::new(CompatibilityMatrix::shipped()),
            PlatformConfig::default(),
            Arc::new(ManualClock::new(10)),
        )
        .unwrap()
    };
    let f =
        Fixture { origins: vec![(LicenseId::Mit, 2), (LicenseId::Gpl20, 1)], copied: vec![(0, 1), (1, 0)], fresh: 1 };
    let ids = {
        let p = open();
        let ids = f.seeded(&p);
        p.download_workflow("bob", &ids[1]).unwrap();
        assert!(p.upload_workflow(request("bob", f.derivative_zip(), LicenseId::Gpl20, vec![])).unwrap().is_accepted());
        ids
    };
    let p = open();
    assert!(p.audit().unwrap().is_empty());
    assert!(p.verify_chain().unwrap().valid);
    assert_eq!(p.search_projects("").unwrap().len(), 3);
    assert_eq!(p.get_project(&ids[1]).unwrap().license, LicenseId::Gpl20);
    let derived = p.get_project(&ProjectId::numbered(3)).unwrap();
    assert_eq!(p.contracts().chain().get(derived.chain_ref).unwrap().index, 4);
}

#[test]
fn concurrent_uploads_and_downloads_serialize() {
    let p = Arc::new(platform());
    let base = Fixture { origins: vec![(LicenseId::Lgpl21, 3)], copied: vec![], fresh: 0 };
    let origin = base.seeded(&p).remove(0);
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let p = p.clone();
            let origin = origin.clone();
            std::thread::spawn(move || {
                let mut accepted = Vec::new();
                for k in 0..5 {
                    let text = format!("int t{t}_k{k}(int a) {{ return a - {k}; }}\n");
                    let zip = build_zip([("src/x.c", text.as_bytes())]).unwrap();
                    let user = if t % 2 == 0 { "alice" } else { "bob" };
                    match p.upload_workflow(request(user, zip, LicenseId::Mit, vec![])).unwrap() {
                        UploadVerdict::Accepted { project_id, .. } => accepted.push(project_id),
                        v => panic!("{v:?}"),
                    }
                    p.download_workflow(user, &origin).unwrap();
                }
                accepted
            })
        })
        .collect();
    let ids: Vec<ProjectId> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    let distinct: BTreeSet<&ProjectId> = ids.iter().collect();
    assert_eq!(distinct.len(), 40);
    assert_eq!(p.contracts().chain().len(), 1 + 1 + 40 + 40);
    assert!(p.verify_chain().unwrap().valid);
    assert!(p.audit().unwrap().is_empty());
}
