//! Config resolution: command-line overrides, then the file, then the solver
//! preset, then desk defaults.

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::envs::EnvName;
use crate::error::{Error, Result};
use crate::game::{GameConfig, Solver};

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub solver: Option<Solver>,
    pub env: Option<EnvName>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.starts_with(key) && l[key.len()..].trim_start().starts_with('=')
    })
    .map(|i| i + 1)
}

fn config_error(text: &str, field: &str, message: String) -> Error {
    let leaf = field.rsplit('.').next().unwrap_or(field);
    let message = match line_of(text, leaf) {
        Some(line) => format!("line {line}: {message}"),
        None => message,
    };
    Error::Config { field: field.to_string(), message }
}

fn merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn take_str(text: &str, file: &mut Table, key: &str) -> Result<Option<String>> {
    match file.remove(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(config_error(text, key, format!("expected a string, found {}", other.type_str()))),
    }
}

/// Pulls the field name out of a serde message such as "unknown field `foo`".
fn field_in(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let end = start + message[start..].find('`')?;
    Some(message[start..end].to_string())
}

/// Resolves a run configuration. `file` is the text of a TOML config, if any.
pub fn resolve(file: Option<&str>, overrides: &Overrides) -> Result<GameConfig> {
    let text = file.unwrap_or("");
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1));
        Error::Config {
            field: "<syntax>".into(),
            message: match line {
                Some(l) => format!("line {l}: {}", e.message()),
                None => e.message().to_string(),
            },
        }
    })?;
    let solver = match (overrides.solver, take_str(text, &mut table, "solver")?) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse().map_err(|e| match e {
            Error::Config { field, message } => config_error(text, &field, message),
            other => other,
        })?,
        (None, None) => Solver::Pal,
    };
    let env = match (overrides.env, take_str(text, &mut table, "env")?) {
        (Some(e), _) => e,
        (None, Some(e)) => e.parse().map_err(|_| config_error(text, "env", format!("unknown env `{e}`")))?,
        (None, None) => EnvName::GridworldGoal,
    };

    let preset = GameConfig::preset(solver, env);
    let mut merged = match Value::try_from(&preset) {
        Ok(Value::Table(t)) => t,
        _ => unreachable!("configs serialize to tables"),
    };
    merge(&mut merged, &table);
    let mut cfg: GameConfig = Value::Table(merged).try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        let field = field_in(&msg).unwrap_or_else(|| "<config>".into());
        config_error(text, &field, msg)
    })?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(budget) = overrides.budget {
        cfg.budget = budget;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Hex SHA-256 of the canonical JSON form of a config.
pub fn config_hash(cfg: &GameConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("configs serialize");
    hex::encode(Sha256::digest(&json))
}

/// Parses `3`, `0..4` (inclusive) or `1,4,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config { field: "seeds".into(), message: format!("cannot parse `{s}` (use 3, 0..4 or 1,4,9)") };
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_preset() {
        let cfg = resolve(None, &Overrides::default()).unwrap();
        assert_eq!(cfg, GameConfig::preset(Solver::Pal, EnvName::GridworldGoal));
    }

    #[test]
    fn precedence_cli_over_file_over_preset() {
        let text = "solver = \"pal\"\nenv = \"point-reacher\"\nseed = 3\nbudget = 9000\n[model]\nensemble_size = 2\n";
        let cfg = resolve(Some(text), &Overrides { seed: Some(7), ..Default::default() }).unwrap();
        assert_eq!((cfg.seed, cfg.budget, cfg.model.ensemble_size), (7, 9000, 2));
        assert_eq!(cfg.n_per_iter, 500);
        // unset fields keep the preset
        assert_eq!(cfg.model.train.epochs, 100);
    }

    #[test]
    fn solver_override_refills_table_values() {
        let text = "solver = \"pal\"\nenv = \"point-reacher\"\n";
        let cfg = resolve(Some(text), &Overrides { solver: Some(Solver::Mal), ..Default::default() }).unwrap();
        assert_eq!(cfg.solver, Solver::Mal);
        assert_eq!((cfg.n_init, cfg.n_per_iter, cfg.npg_steps, cfg.buffer_capacity), (5000, 2000, 25, None));
    }

    #[test]
    fn errors_name_the_field_and_line() {
        match resolve(Some("seed = 1\nsolver = \"foo\"\n"), &Overrides::default()) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "solver");
                assert!(message.starts_with("line 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match resolve(Some("[model]\nensembel_size = 3\n"), &Overrides::default()) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "ensembel_size");
                assert!(message.starts_with("line 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(resolve(Some("budget = \"x\""), &Overrides::default()), Err(Error::Config { .. })));
        assert!(matches!(resolve(Some("budget = [1"), &Overrides::default()), Err(Error::Config { .. })));
    }

    #[test]
    fn resolution_is_pure_and_hash_tracks_content() {
        let text = "env = \"pendulum\"\n[npg]\nn_traj = 10\n";
        let a = resolve(Some(text), &Overrides::default()).unwrap();
        let b = resolve(Some(text), &Overrides::default()).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c = resolve(Some(text), &Overrides { seed: Some(1), ..Default::default() }).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..4").unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(parse_seeds("1,4,9").unwrap(), vec![1, 4, 9]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert!(parse_seeds("4..1").is_err());
    }
}
