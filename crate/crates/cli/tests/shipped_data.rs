//! Guards the equation file distributed in data/: it must parse, stay in
//! canonical form, and never change silently.

use sha2::{Digest, Sha256};

use polyseries_cli::format::{parse_ode, render_ode};

const SHA256: &str = "3d1f5bdc6fd265fd196493d8ea78c94285c37e5b8736e86b1537885a9f9a262e";

fn shipped_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/appendix_a.ode")
}

#[test]
fn shipped_ode_checksum_is_pinned() {
    let bytes = std::fs::read(shipped_path()).unwrap();
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(hex, SHA256, "data/appendix_a.ode changed");
}

#[test]
fn shipped_ode_parses_and_is_canonical() {
    let text = std::fs::read_to_string(shipped_path()).unwrap();
    let ode = parse_ode(&text).unwrap();
    assert_eq!(ode.order(), 8);
    for k in 0..=8 {
        assert_eq!(polyseries_core::poly::deg(ode.poly(k)), Some(29 + k));
    }
    assert_eq!(render_ode(&ode), text, "file is not in canonical rendering");
}
