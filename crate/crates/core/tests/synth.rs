use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use senstype::synth::{generate_corpus, CorpusConfig, CorpusSpec};

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn same_seed_same_directory() {
    let spec = CorpusSpec {
        traces_per_type: 3,
        duration: 2.0 * 86_400.0,
        ..CorpusSpec::shifted_building(9)
    };
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    generate_corpus(&spec).unwrap().write_to(&a).unwrap();
    generate_corpus(&spec).unwrap().write_to(&b).unwrap();
    let (ca, cb) = (contents(&a), contents(&b));
    assert_eq!(ca.len(), 19);
    assert_eq!(ca, cb);

    let c = tmp.path().join("c");
    generate_corpus(&CorpusSpec { seed: 10, ..spec })
        .unwrap()
        .write_to(&c)
        .unwrap();
    let cc = contents(&c);
    assert_eq!(cc["manifest.csv"], ca["manifest.csv"]);
    assert_ne!(cc["traces/co2_000.csv"], ca["traces/co2_000.csv"]);
}

#[test]
fn malformed_config_names_the_key() {
    let err = CorpusConfig::parse("seed = 1\nduraton = 5.0\n", Path::new("c.toml")).unwrap_err();
    assert!(err.to_string().contains("duraton"), "{err}");

    let err = CorpusConfig::parse("seed = \"x\"\n", Path::new("c.toml")).unwrap_err();
    assert!(err.to_string().contains("c.toml"), "{err}");

    let err = CorpusConfig::parse(
        "preset = \"default\"\ntraces_per_type = 0\n",
        Path::new("c.toml"),
    )
    .unwrap()
    .resolve(1)
    .unwrap_err();
    assert!(err.to_string().contains("traces_per_type"), "{err}");
}

#[test]
fn presets_validate() {
    for name in ["default", "shifted", "overlap", "confusable"] {
        CorpusSpec::preset(name, 1).unwrap().validate().unwrap();
    }
}
