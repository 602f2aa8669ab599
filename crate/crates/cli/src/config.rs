//! Pipeline configuration: a TOML file whose keys can all be overridden
//! with `--set section.key=value`.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use pharmwatch::btm::{BtmConfig, Window};
use pharmwatch::classifier::EvalConfig;
use pharmwatch::corpus::{KeywordSet, MatchMode, SchemaMode, Stopwords, Tokenizer, DEFAULT_DRUGS};
use pharmwatch::features::EntityMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub input: InputConfig,
    pub keywords: KeywordConfig,
    pub tokenizer: TokenizerConfig,
    pub btm: BtmSection,
    pub isolation: IsolationConfig,
    pub features: FeatureConfig,
    pub classifier: ClassifierConfig,
    pub service: ServiceConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Raw tweet JSONL files.
    pub paths: Vec<PathBuf>,
    pub schema: Schema,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            paths: Vec::new(),
            schema: Schema::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matching {
    Token,
    Substring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeywordConfig {
    pub drugs: Vec<String>,
    #[serde(rename = "match")]
    pub matching: Matching,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        Self {
            drugs: DEFAULT_DRUGS.iter().map(|d| d.to_string()).collect(),
            matching: Matching::Token,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    /// `english`, `none`, or a path to a stopword file.
    pub stopwords: String,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            stopwords: "english".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BtmSection {
    /// Fixed topic count; chosen from the corpus sparsity when absent.
    pub k: Option<usize>,
    pub k_cap: usize,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Biterm window in tokens; 0 pairs every two tokens of a tweet.
    pub window: usize,
}

impl Default for BtmSection {
    fn default() -> Self {
        Self {
            k: None,
            k_cap: 20,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 0,
            window: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsolationConfig {
    /// Annotation log; `annotations.jsonl` in the output directory when absent.
    pub annotations: Option<PathBuf>,
    /// Rogue topics given directly instead of resolved from topic annotations.
    pub rogue_topics: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entities {
    Presence,
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub entities: Entities,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            entities: Entities::Presence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub l2_lambda: f64,
    pub split: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            l2_lambda: 1.0,
            split: 0.7,
            runs: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Directory of static UI assets served at `/`.
    pub assets: Option<PathBuf>,
    pub samples: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            assets: None,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "pharmwatch-out".into(),
        }
    }
}

/// Sets `section.key` in `table`, reading `raw` as a TOML value and falling
/// back to a plain string.
fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment}: expected section.key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.len() != 2 || path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "--set {assignment}: expected section.key=value"
        )));
    }
    let raw = raw.trim();
    let value = toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let section = table
        .entry(path[0].to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    let Value::Table(section) = section else {
        return Err(CliError::Config(format!("`{}` is not a section", path[0])));
    };
    section.insert(path[1].to_string(), value);
    Ok(())
}

impl Config {
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: Config = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` when given, otherwise starts from the defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if let Err(e) = KeywordSet::new(&self.keywords.drugs) {
            return bad("keywords.drugs", e.to_string());
        }
        if let Some(k) = self.btm.k {
            if k < 2 {
                return bad("btm.k", format!("must be at least 2, got {k}"));
            }
        }
        if self.btm.k_cap < 2 {
            return bad("btm.k_cap", format!("must be at least 2, got {}", self.btm.k_cap));
        }
        if let Some(a) = self.btm.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return bad("btm.alpha", format!("must be positive, got {a}"));
            }
        }
        if !(self.btm.beta > 0.0 && self.btm.beta.is_finite()) {
            return bad("btm.beta", format!("must be positive, got {}", self.btm.beta));
        }
        if self.btm.iterations == 0 {
            return bad("btm.iterations", "must be at least 1".into());
        }
        if self.btm.window == 1 {
            return bad("btm.window", "must be 0 (unbounded) or at least 2".into());
        }
        let c = &self.classifier;
        if !(c.split > 0.0 && c.split < 1.0) {
            return bad("classifier.split", format!("must lie in (0, 1), got {}", c.split));
        }
        if c.runs == 0 {
            return bad("classifier.runs", "must be at least 1".into());
        }
        if !(c.l2_lambda >= 0.0 && c.l2_lambda.is_finite()) {
            return bad(
                "classifier.l2_lambda",
                format!("must be nonnegative, got {}", c.l2_lambda),
            );
        }
        if self.service.bind.parse::<SocketAddr>().is_err() {
            return bad(
                "service.bind",
                format!("`{}` is not a socket address", self.service.bind),
            );
        }
        if self.service.samples == 0 {
            return bad("service.samples", "must be at least 1".into());
        }
        Ok(())
    }

    /// Checks that the raw inputs exist; only ingestion needs them.
    pub fn validate_inputs(&self) -> Result<(), CliError> {
        if self.input.paths.is_empty() {
            return Err(CliError::Config("input.paths: no input files given".into()));
        }
        for p in &self.input.paths {
            if !p.is_file() {
                return Err(CliError::Config(format!("input.paths: {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// The effective configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex(&Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn schema_mode(&self) -> SchemaMode {
        match self.input.schema {
            Schema::Strict => SchemaMode::Strict,
            Schema::Lenient => SchemaMode::Lenient,
        }
    }

    pub fn keyword_set(&self) -> KeywordSet {
        KeywordSet::new(&self.keywords.drugs).expect("validated")
    }

    pub fn match_mode(&self) -> MatchMode {
        match self.keywords.matching {
            Matching::Token => MatchMode::Token,
            Matching::Substring => MatchMode::Substring,
        }
    }

    pub fn tokenizer(&self) -> Result<Tokenizer, CliError> {
        let stopwords = match self.tokenizer.stopwords.as_str() {
            "english" => Stopwords::english(),
            "none" => Stopwords::none(),
            path => Stopwords::load(path).map_err(|e| CliError::Config(format!("tokenizer.stopwords: {e}")))?,
        };
        Ok(Tokenizer::new(stopwords))
    }

    pub fn window(&self) -> Window {
        match self.btm.window {
            0 => Window::Unbounded,
            n => Window::Span(n),
        }
    }

    pub fn btm_config(&self, k: usize) -> BtmConfig {
        BtmConfig {
            k,
            alpha: self.btm.alpha,
            beta: self.btm.beta,
            iterations: self.btm.iterations,
            seed: self.btm.seed,
        }
    }

    pub fn entity_mode(&self) -> EntityMode {
        match self.features.entities {
            Entities::Presence => EntityMode::Presence,
            Entities::Count => EntityMode::Count,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            split_fraction: self.classifier.split,
            runs: self.classifier.runs,
            seed: self.classifier.seed,
            l2_lambda: self.classifier.l2_lambda,
        }
    }

    pub fn annotations_path(&self) -> PathBuf {
        self.isolation
            .annotations
            .clone()
            .unwrap_or_else(|| self.output.dir.join("annotations.jsonl"))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
