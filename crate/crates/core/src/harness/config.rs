//! Experiment configuration in a flat `key=value` format.
//!
//! Pairs are separated by whitespace or newlines and `#` starts a comment
//! that runs to the end of the line. Recognized keys:
//!
//! | key | values | default |
//! |---|---|---|
//! | `game` | `cb`, `hs` | required |
//! | `k`, `n` | positive integers | required |
//! | `kappa` | coherence radius (hs only) | required for hs |
//! | `condition` | `c1`, `c2` (hs only) | `c1` |
//! | `T` | horizon, at least 1 | required |
//! | `reps` | repetitions, at least 1 | `20` |
//! | `seed` | unsigned integer | `0` |
//! | `tuning` | `auto`, `explicit` | `auto` |
//! | `eta`, `beta` | positive reals, both required when explicit | |
//! | `adversary` | see below | `uniform` (cb), `random` (hs) |
//! | `values` | `uniform`, `random` (cb only) | `uniform` |
//! | `observation` | `game`, `self`, `full` | `game` |
//! | `diagnostics` | `on`, `off` | `off` |
//! | `output` | CSV path | none |
//!
//! Blotto adversaries are `uniform`, `fixed:3,0,0`, `cyclic:3,0,0;0,3,0`
//! and `best-response`. Hide-and-Seek adversaries are `random`,
//! `fixed:0.2,0.7,0.1` and `adaptive` or `adaptive:<bump>`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::games::{CbAdversary, HsAdversary, HsCondition, ValuesMode};

/// Bump used by `adversary=adaptive` without an explicit value.
pub const DEFAULT_ADAPTIVE_BUMP: f64 = 0.5;
pub const DEFAULT_REPETITIONS: usize = 20;

/// Structural parameters of a game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Game {
    Blotto {
        k: u32,
        n: usize,
    },
    HideSeek {
        k: usize,
        n: usize,
        kappa: usize,
        condition: HsCondition,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Adversary {
    Blotto(CbAdversary),
    HideSeek(HsAdversary),
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Tuning {
    #[default]
    Auto,
    Explicit {
        eta: f64,
        beta: f64,
    },
}

/// Which observation graphs the learner is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ObservationMode {
    /// The game's side-observations.
    #[default]
    Game,
    /// Self-loops only, i.e. plain semi-bandit feedback.
    SelfLoops,
    /// Every loss is revealed.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub game: Game,
    pub horizon: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub tuning: Tuning,
    pub adversary: Adversary,
    pub values: ValuesMode,
    pub observation: ObservationMode,
    /// Record `Q_t` at every stage.
    pub diagnostics: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Config with every optional key at its default.
    pub fn new(game: Game, horizon: usize, seed: u64) -> Self {
        let adversary = match game {
            Game::Blotto { .. } => Adversary::Blotto(CbAdversary::Uniform),
            Game::HideSeek { .. } => Adversary::HideSeek(HsAdversary::Random),
        };
        Self {
            game,
            horizon,
            repetitions: DEFAULT_REPETITIONS,
            seed,
            tuning: Tuning::Auto,
            adversary,
            values: ValuesMode::Uniform,
            observation: ObservationMode::Game,
            diagnostics: false,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("reps must be at least 1".into()));
        }
        if let Tuning::Explicit { eta, beta } = self.tuning {
            if !(eta > 0.0 && eta.is_finite() && beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "explicit eta={eta} and beta={beta} must be positive and finite"
                )));
            }
        }
        match (&self.game, &self.adversary) {
            (Game::Blotto { .. }, Adversary::Blotto(_))
            | (Game::HideSeek { .. }, Adversary::HideSeek(_)) => Ok(()),
            _ => Err(Error::InvalidParameter(
                "adversary does not belong to the configured game".into(),
            )),
        }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut entries = Entries::parse(text)?;
    let game_name = entries.required("game")?;
    let game = match game_name.value.as_str() {
        "cb" => Game::Blotto {
            k: entries.required_num("k")?,
            n: entries.required_num("n")?,
        },
        "hs" => Game::HideSeek {
            k: entries.required_num("k")?,
            n: entries.required_num("n")?,
            kappa: entries.required_num("kappa")?,
            condition: match entries.take("condition") {
                None => HsCondition::C1,
                Some(e) => match e.value.as_str() {
                    "c1" => HsCondition::C1,
                    "c2" => HsCondition::C2,
                    _ => return Err(e.error("condition must be c1 or c2")),
                },
            },
        },
        _ => return Err(game_name.error("game must be cb or hs")),
    };
    let horizon = entries.required_num("T")?;
    let seed = entries.optional_num("seed")?.unwrap_or(0);
    let mut config = ExperimentConfig::new(game, horizon, seed);
    if let Some(reps) = entries.optional_num("reps")? {
        config.repetitions = reps;
    }

    let eta = entries.take("eta");
    let beta = entries.take("beta");
    let tuning = entries.take("tuning");
    config.tuning = match tuning.as_ref().map(|e| e.value.as_str()) {
        None | Some("auto") => {
            if let Some(e) = eta.as_ref().or(beta.as_ref()) {
                return Err(e.error("requires tuning=explicit"));
            }
            Tuning::Auto
        }
        Some("explicit") => Tuning::Explicit {
            eta: eta
                .ok_or_else(|| Error::MissingKey("eta".into()))?
                .number()?,
            beta: beta
                .ok_or_else(|| Error::MissingKey("beta".into()))?
                .number()?,
        },
        Some(_) => return Err(tuning.unwrap().error("tuning must be auto or explicit")),
    };

    if let Some(e) = entries.take("adversary") {
        config.adversary = parse_adversary(&game, &e.value).map_err(|m| e.error(&m))?;
    }
    if let Some(e) = entries.take("values") {
        if matches!(game, Game::HideSeek { .. }) {
            return Err(e.error("values only applies to game=cb"));
        }
        config.values = match e.value.as_str() {
            "uniform" => ValuesMode::Uniform,
            "random" => ValuesMode::Random,
            _ => return Err(e.error("values must be uniform or random")),
        };
    }
    if let Some(e) = entries.take("observation") {
        config.observation = match e.value.as_str() {
            "game" => ObservationMode::Game,
            "self" => ObservationMode::SelfLoops,
            "full" => ObservationMode::Full,
            _ => return Err(e.error("observation must be game, self or full")),
        };
    }
    if let Some(e) = entries.take("diagnostics") {
        config.diagnostics = match e.value.as_str() {
            "on" => true,
            "off" => false,
            _ => return Err(e.error("diagnostics must be on or off")),
        };
    }
    if let Some(e) = entries.take("output") {
        config.output = Some(PathBuf::from(e.value));
    }
    entries.reject_rest()?;
    config.validate()?;
    Ok(config)
}

fn parse_adversary(game: &Game, text: &str) -> std::result::Result<Adversary, String> {
    let (name, arg) = match text.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (text, None),
    };
    match (game, name, arg) {
        (Game::Blotto { .. }, "uniform", None) => Ok(Adversary::Blotto(CbAdversary::Uniform)),
        (Game::Blotto { .. }, "best-response", None) => {
            Ok(Adversary::Blotto(CbAdversary::BestResponse))
        }
        (Game::Blotto { .. }, "fixed", Some(arg)) => {
            Ok(Adversary::Blotto(CbAdversary::Fixed(parse_list(arg)?)))
        }
        (Game::Blotto { .. }, "cyclic", Some(arg)) => Ok(Adversary::Blotto(CbAdversary::Cyclic(
            arg.split(';')
                .map(parse_list)
                .collect::<std::result::Result<_, _>>()?,
        ))),
        (Game::HideSeek { .. }, "random", None) => Ok(Adversary::HideSeek(HsAdversary::Random)),
        (Game::HideSeek { .. }, "fixed", Some(arg)) => {
            Ok(Adversary::HideSeek(HsAdversary::Fixed(parse_list(arg)?)))
        }
        (Game::HideSeek { .. }, "adaptive", arg) => {
            let bump = match arg {
                None => DEFAULT_ADAPTIVE_BUMP,
                Some(a) => a.parse().map_err(|_| format!("bad adaptive bump `{a}`"))?,
            };
            Ok(Adversary::HideSeek(HsAdversary::Adaptive { bump }))
        }
        _ => Err(format!("unknown adversary `{text}` for this game")),
    }
}

fn parse_list<T: FromStr>(text: &str) -> std::result::Result<Vec<T>, String> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| format!("bad list entry `{v}`"))
        })
        .collect()
}

const KNOWN_KEYS: &[&str] = &[
    "game",
    "k",
    "n",
    "kappa",
    "condition",
    "T",
    "reps",
    "seed",
    "tuning",
    "eta",
    "beta",
    "adversary",
    "values",
    "observation",
    "diagnostics",
    "output",
];

struct Entry {
    key: String,
    value: String,
    line: usize,
}

impl Entry {
    fn number<T: FromStr>(&self) -> Result<T> {
        self.value
            .parse()
            .map_err(|_| self.error("not a valid number"))
    }

    fn error(&self, message: &str) -> Error {
        Error::Parse {
            line: self.line,
            message: format!("{}={}: {message}", self.key, self.value),
        }
    }
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            for token in content.split_whitespace() {
                let Some((key, value)) = token.split_once('=') else {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected key=value, got `{token}`"),
                    });
                };
                if !KNOWN_KEYS.contains(&key) {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key `{key}`"),
                    });
                }
                if value.is_empty() {
                    return Err(Error::Parse {
                        line,
                        message: format!("empty value for `{key}`"),
                    });
                }
                let entry = Entry {
                    key: key.to_string(),
                    value: value.to_string(),
                    line,
                };
                if let Some(prev) = map.insert(key.to_string(), entry) {
                    return Err(Error::Parse {
                        line,
                        message: format!("`{key}` already set on line {}", prev.line),
                    });
                }
            }
        }
        Ok(Self(map))
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<Entry> {
        self.take(key).ok_or_else(|| Error::MissingKey(key.into()))
    }

    fn required_num<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.required(key)?.number()
    }

    fn optional_num<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        self.take(key).map(|e| e.number()).transpose()
    }

    /// Fails on any key left over, such as `kappa` with `game=cb`.
    fn reject_rest(self) -> Result<()> {
        match self.0.into_values().next() {
            None => Ok(()),
            Some(e) => Err(e.error("key does not apply to this game")),
        }
    }
}
