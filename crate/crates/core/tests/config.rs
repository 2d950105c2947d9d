use std::path::Path;

use csifb::config::RunConfig;

fn shipped(name: &str) -> RunConfig {
    RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

#[test]
fn shipped_profiles_match_the_builtins() {
    assert_eq!(shipped("desk.toml"), RunConfig::desk());
    assert_eq!(shipped("paper.toml"), RunConfig::paper());
}

#[test]
fn toml_round_trips() {
    for c in [RunConfig::desk(), RunConfig::paper()] {
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }
}

#[test]
fn invalid_values_name_their_key() {
    let text = RunConfig::desk().to_toml().unwrap().replace("n_test = 1000", "n_test = 0");
    let err = RunConfig::from_toml(&text).unwrap_err().to_string();
    assert!(err.contains("n_test"), "{err}");
    let text = RunConfig::desk().to_toml().unwrap().replace("format_version = 1", "format_version = 99");
    assert!(RunConfig::from_toml(&text).unwrap_err().to_string().contains("format_version"));
}
