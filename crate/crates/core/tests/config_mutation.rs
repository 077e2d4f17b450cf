use proptest::prelude::*;
use qreset::experiment::{scenario_config, ExperimentConfig};

fn valid_text() -> String {
    scenario_config("fig3c").unwrap().to_toml().unwrap()
}

#[derive(Debug, Clone)]
enum Mutation {
    Replace(usize, char),
    Delete(usize, usize),
    Duplicate(usize, usize),
    Insert(usize, String),
}

fn mutation() -> impl Strategy<Value = Mutation> {
    let pieces = prop::sample::select(vec![
        "-",
        "0",
        "1e400",
        "nan",
        "inf",
        "\"",
        "[",
        "]",
        "=",
        "\n",
        ".",
        "pi",
        ",",
        "[[targets]]\ntheta = 0.0\nphi = 0.0\n",
        "n_qubits = 0\n",
        "fock_levels = 1\n",
        "theta = 7.0\n",
        "t_final_us = -1.0\n",
        "bloch_point(",
        "x = 1\n",
    ]);
    prop_oneof![
        (any::<usize>(), prop::char::range(' ', '~')).prop_map(|(i, c)| Mutation::Replace(i, c)),
        (any::<usize>(), 1usize..40).prop_map(|(i, n)| Mutation::Delete(i, n)),
        (any::<usize>(), 1usize..80).prop_map(|(i, n)| Mutation::Duplicate(i, n)),
        (any::<usize>(), pieces).prop_map(|(i, s)| Mutation::Insert(i, s.to_string())),
    ]
}

fn apply(text: &str, muts: &[Mutation]) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for m in muts {
        let len = chars.len().max(1);
        match m {
            Mutation::Replace(i, c) => {
                if !chars.is_empty() {
                    chars[i % len] = *c;
                }
            }
            Mutation::Delete(i, n) => {
                let at = i % len;
                let end = (at + n).min(chars.len());
                chars.drain(at.min(chars.len())..end);
            }
            Mutation::Duplicate(i, n) => {
                let at = (i % len).min(chars.len());
                let end = (at + n).min(chars.len());
                let copy: Vec<char> = chars[at..end].to_vec();
                chars.splice(at..at, copy);
            }
            Mutation::Insert(i, s) => {
                let at = (i % len).min(chars.len());
                chars.splice(at..at, s.chars());
            }
        }
    }
    chars.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    /// Mutated configs either parse into a valid, round-tripping config or
    /// fail with a structured error; nothing panics.
    #[test]
    fn mutated_configs_never_panic(muts in prop::collection::vec(mutation(), 1..5)) {
        let text = apply(&valid_text(), &muts);
        match ExperimentConfig::parse(&text) {
            Ok(cfg) => {
                cfg.validate().unwrap();
                let again = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
                prop_assert_eq!(again, cfg);
            }
            Err(e) => prop_assert_eq!(e.exit_code(), 2),
        }
    }
}

#[test]
fn every_scenario_round_trips() {
    for name in qreset::experiment::SCENARIOS {
        let cfg = scenario_config(name).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
