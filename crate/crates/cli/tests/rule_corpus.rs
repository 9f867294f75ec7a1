//! The bundled `rules/` files agree with the library corpus and are in canonical form.
//! Set `UBP_BLESS=1` to rewrite them.

use std::path::PathBuf;

use ubp::family::{classify, corpus, SearchConfig};
use ubp_cli::rulefile::{load, Expected, RuleFile};

fn rules_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../rules")
}

#[test]
fn bundled_rule_files_match_the_corpus() {
    let bless = std::env::var("UBP_BLESS").is_ok_and(|v| v == "1");
    for f in corpus::all() {
        let class = classify(&f, &SearchConfig::default()).unwrap();
        let mut rf = RuleFile::from_family(&f);
        rf.expected = Some(Expected::of(&class));
        let path = rules_dir().join(format!("{}.json", f.name()));
        if bless {
            std::fs::create_dir_all(rules_dir()).unwrap();
            std::fs::write(&path, rf.write()).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, rf.write(), "{} is stale", path.display());
        let (g, expected) = load(path.to_str().unwrap()).unwrap();
        assert_eq!(g, f);
        assert!(expected.unwrap().mismatches(&class).is_empty());
    }
}
