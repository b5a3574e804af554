//! Plain-text model configuration.
//!
//! ```text
//! # comment
//! [parameters]
//! beta = 0.003
//! converter_input = initial
//!
//! [converter:eta]
//! 0 0
//! 0.5 0.291
//!
//! [scenario:b]
//! alpha = 0.07
//! job_fold = 1
//! ```
//!
//! A document is merged over the embedded defaults. Unknown keys, malformed
//! lines and invalid values are rejected with the offending line number.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ConverterInput, Model, ModelParameters};
use crate::scenario::{builtin_scenarios, ScenarioSpec};
use crate::table::{Converters, TableFunction};

/// Effective configuration of the published model.
pub const DEFAULT_CONFIG: &str = include_str!("default.cfg");

const CONVERTERS: [&str; 4] = ["eta", "mfp", "prices", "theta"];

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model: Model,
    /// Named scenarios; the first entry is always the baseline.
    pub scenarios: Vec<ScenarioSpec>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let model = Model::default();
        let scenarios = builtin_scenarios(model.params.alpha);
        Self { model, scenarios }
    }
}

impl ModelConfig {
    pub fn scenario(&self, id: &str) -> Option<&ScenarioSpec> {
        self.scenarios.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Section {
    None,
    Parameters,
    Converter(&'static str),
    Scenario(String),
}

impl Section {
    fn label(&self) -> String {
        match self {
            Section::None => "top level".into(),
            Section::Parameters => "parameters".into(),
            Section::Converter(name) => format!("converter:{name}"),
            Section::Scenario(id) => format!("scenario:{id}"),
        }
    }
}

#[derive(Default)]
struct ScenarioDraft {
    header_line: usize,
    alpha: Option<f64>,
    job_fold: Option<f64>,
    ramp_start: Option<f64>,
    ramp_duration: Option<f64>,
    notes: Option<String>,
}

struct Parser {
    config: ModelConfig,
    section: Section,
    param_lines: HashMap<String, usize>,
    seen_sections: HashMap<String, usize>,
    points: Vec<(f64, f64, usize)>,
    scenario_order: Vec<String>,
    scenarios: HashMap<String, ScenarioDraft>,
}

fn parse_number(text: &str, line: usize, section: &Section) -> Result<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config {
            line,
            section: section.label(),
            message: format!("`{text}` is not a finite number"),
        })
}

impl Parser {
    fn new(base: ModelConfig) -> Self {
        Self {
            config: base,
            section: Section::None,
            param_lines: HashMap::new(),
            seen_sections: HashMap::new(),
            points: Vec::new(),
            scenario_order: Vec::new(),
            scenarios: HashMap::new(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Config {
            line,
            section: self.section.label(),
            message: message.into(),
        }
    }

    fn finish_section(&mut self) -> Result<()> {
        if let Section::Converter(name) = self.section {
            let pts: Vec<(f64, f64)> = self.points.iter().map(|&(x, y, _)| (x, y)).collect();
            let first_line = self.points.first().map_or(0, |p| p.2);
            if pts.len() < 2 {
                return Err(self.err(first_line, "a converter needs at least 2 points"));
            }
            if let Some(k) = pts.windows(2).position(|w| w[1].0 <= w[0].0) {
                let line = self.points[k + 1].2;
                return Err(self.err(line, "x values must be strictly increasing"));
            }
            let table =
                TableFunction::new(&pts).map_err(|e| self.err(first_line, e.to_string()))?;
            let c = &mut self.config.model.converters;
            match name {
                "eta" => c.eta = table,
                "mfp" => c.mfp = table,
                "prices" => c.prices = table,
                _ => c.theta = table,
            }
            self.points.clear();
        }
        Ok(())
    }

    fn header(&mut self, name: &str, line: usize) -> Result<()> {
        self.finish_section()?;
        let section = if name == "parameters" {
            Section::Parameters
        } else if let Some(conv) = name.strip_prefix("converter:") {
            match CONVERTERS.iter().find(|&&c| c == conv.trim()) {
                Some(c) => Section::Converter(c),
                None => {
                    return Err(Error::Config {
                        line,
                        section: name.into(),
                        message: format!(
                            "unknown converter `{conv}` (expected one of {CONVERTERS:?})"
                        ),
                    })
                }
            }
        } else if let Some(id) = name.strip_prefix("scenario:") {
            let id = id.trim();
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(Error::Config {
                    line,
                    section: name.into(),
                    message: "scenario ids must be non-empty and contain no whitespace".into(),
                });
            }
            if id == "baseline" {
                return Err(Error::Config {
                    line,
                    section: name.into(),
                    message: "the baseline is defined by [parameters] alpha".into(),
                });
            }
            Section::Scenario(id.to_string())
        } else {
            return Err(Error::Config {
                line,
                section: name.into(),
                message: "unknown section".into(),
            });
        };
        let label = section.label();
        if let Some(prev) = self.seen_sections.insert(label.clone(), line) {
            return Err(Error::Config {
                line,
                section: label,
                message: format!("duplicate section (first at line {prev})"),
            });
        }
        if let Section::Scenario(id) = &section {
            self.scenario_order.push(id.clone());
            self.scenarios.insert(
                id.clone(),
                ScenarioDraft {
                    header_line: line,
                    ..Default::default()
                },
            );
        }
        self.section = section;
        Ok(())
    }

    fn key_value(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match self.section.clone() {
            Section::None => Err(self.err(line, "key outside of any section")),
            Section::Converter(_) => Err(self.err(line, "expected an `x y` pair")),
            Section::Parameters => {
                if let Some(prev) = self.param_lines.insert(key.to_string(), line) {
                    return Err(self.err(
                        line,
                        format!("duplicate key `{key}` (first at line {prev})"),
                    ));
                }
                if key == "converter_input" {
                    self.config.model.converter_input = ConverterInput::parse(value)
                        .ok_or_else(|| self.err(line, format!("converter_input must be `initial` or `baseline`, got `{value}`")))?;
                    return Ok(());
                }
                let v = parse_number(value, line, &self.section)?;
                match self.config.model.params.get_mut(key) {
                    Some(slot) => {
                        *slot = v;
                        Ok(())
                    }
                    None => Err(self.err(line, format!("unknown parameter `{key}`"))),
                }
            }
            Section::Scenario(id) => {
                let number = |s: &Self| parse_number(value, line, &s.section);
                let parsed = match key {
                    "alpha" | "job_fold" | "ramp_start" | "ramp_duration" => Some(number(self)?),
                    "notes" => None,
                    _ => return Err(self.err(line, format!("unknown scenario key `{key}`"))),
                };
                let draft = self.scenarios.get_mut(&id).expect("scenario draft");
                let duplicate = match key {
                    "alpha" => draft.alpha.replace(parsed.unwrap()).is_some(),
                    "job_fold" => draft.job_fold.replace(parsed.unwrap()).is_some(),
                    "ramp_start" => draft.ramp_start.replace(parsed.unwrap()).is_some(),
                    "ramp_duration" => draft.ramp_duration.replace(parsed.unwrap()).is_some(),
                    _ => draft.notes.replace(value.to_string()).is_some(),
                };
                if duplicate {
                    return Err(self.err(line, format!("duplicate key `{key}`")));
                }
                Ok(())
            }
        }
    }

    fn point(&mut self, text: &str, line: usize) -> Result<()> {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(self.err(line, format!("expected `x y`, got `{text}`")));
        }
        let x = parse_number(fields[0], line, &self.section)?;
        let y = parse_number(fields[1], line, &self.section)?;
        self.points.push((x, y, line));
        Ok(())
    }

    fn feed(&mut self, doc: &str) -> Result<()> {
        for (k, raw) in doc.lines().enumerate() {
            let line = k + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            if let Some(inner) = text.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .ok_or_else(|| self.err(line, "unterminated section header"))?;
                self.header(name.trim(), line)?;
            } else if let Some((key, value)) = text.split_once('=') {
                let (key, value) = (key.trim(), value.trim());
                if key.is_empty() {
                    return Err(self.err(line, "missing key"));
                }
                self.key_value(key, value, line)?;
            } else if matches!(self.section, Section::Converter(_)) {
                self.point(text, line)?;
            } else {
                return Err(self.err(line, format!("malformed line `{text}`")));
            }
        }
        self.finish_section()
    }

    fn finish(mut self) -> Result<ModelConfig> {
        if let Err(e) = self.config.model.params.validate() {
            let line = match &e {
                Error::InvalidParameter { name, .. } => self.param_lines.get(name).copied(),
                _ => None,
            }
            .or_else(|| self.param_lines.values().max().copied())
            .unwrap_or(0);
            return Err(Error::Config {
                line,
                section: "parameters".into(),
                message: e.to_string(),
            });
        }

        let alpha = self.config.model.params.alpha;
        let mut scenarios = std::mem::take(&mut self.config.scenarios);
        scenarios[0] = ScenarioSpec {
            alpha,
            ..scenarios[0].clone()
        };
        for id in &self.scenario_order {
            let draft = &self.scenarios[id];
            let existing = scenarios.iter().position(|s| &s.id == id);
            let mut spec = match existing {
                Some(k) => scenarios[k].clone(),
                None => {
                    let alpha = draft.alpha.ok_or_else(|| Error::Config {
                        line: draft.header_line,
                        section: format!("scenario:{id}"),
                        message: "new scenarios must set `alpha`".into(),
                    })?;
                    ScenarioSpec::new(id.clone(), alpha)
                }
            };
            if let Some(v) = draft.alpha {
                spec.alpha = v;
            }
            if let Some(v) = draft.job_fold {
                spec.job_fold = v;
            }
            if draft.ramp_start.is_some() {
                spec.ramp_start = draft.ramp_start;
            }
            if let Some(v) = draft.ramp_duration {
                spec.ramp_duration = v;
            }
            if let Some(v) = &draft.notes {
                spec.notes = v.clone();
            }
            spec.validate().map_err(|e| Error::Config {
                line: draft.header_line,
                section: format!("scenario:{id}"),
                message: e.to_string(),
            })?;
            match existing {
                Some(k) => scenarios[k] = spec,
                None => scenarios.push(spec),
            }
        }
        self.config.scenarios = scenarios;
        Ok(self.config)
    }
}

fn parse_over(base: ModelConfig, doc: &str) -> Result<ModelConfig> {
    let mut parser = Parser::new(base);
    parser.feed(doc)?;
    parser.finish()
}

/// Parses `doc` over the embedded default document.
pub fn parse_config(doc: &str) -> Result<ModelConfig> {
    let defaults = parse_over(ModelConfig::default(), DEFAULT_CONFIG)?;
    parse_over(defaults, doc)
}

fn render_table(out: &mut String, name: &str, table: &TableFunction) {
    let _ = writeln!(out, "\n[converter:{name}]");
    for (x, y) in table.points() {
        let _ = writeln!(out, "{x} {y}");
    }
}

/// Parameters and converters only.
pub fn render_model(model: &Model) -> String {
    let mut out = String::from("[parameters]\n");
    for key in ModelParameters::KEYS {
        let _ = writeln!(out, "{key} = {}", model.params.get(key).unwrap_or(f64::NAN));
    }
    let _ = writeln!(out, "converter_input = {}", model.converter_input.as_str());
    let Converters {
        eta,
        mfp,
        prices,
        theta,
    } = &model.converters;
    render_table(&mut out, "eta", eta);
    render_table(&mut out, "mfp", mfp);
    render_table(&mut out, "prices", prices);
    render_table(&mut out, "theta", theta);
    out
}

/// Full effective configuration; re-parsing it reproduces `config`.
pub fn render_config(config: &ModelConfig) -> String {
    let mut out = render_model(&config.model);
    for s in config.scenarios.iter().filter(|s| s.id != "baseline") {
        let _ = writeln!(out, "\n[scenario:{}]", s.id);
        let _ = writeln!(out, "alpha = {}", s.alpha);
        let _ = writeln!(out, "job_fold = {}", s.job_fold);
        if let Some(t0) = s.ramp_start {
            let _ = writeln!(out, "ramp_start = {t0}");
        }
        let _ = writeln!(out, "ramp_duration = {}", s.ramp_duration);
        if !s.notes.is_empty() {
            let _ = writeln!(out, "notes = {}", s.notes);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.model, Model::default());
        assert_eq!(cfg.scenarios, builtin_scenarios(0.018));
        assert_eq!(cfg.model.params.p0, 26_638_544.0);
        assert_eq!(cfg.model.params.tau, 86_985.0);
    }

    #[test]
    fn embedded_document_is_the_rendered_default() {
        assert_eq!(render_config(&ModelConfig::default()), DEFAULT_CONFIG);
    }

    #[test]
    fn single_override_merges() {
        let cfg = parse_config("[parameters]\nbeta = 0.003\n").unwrap();
        let mut expected = ModelParameters::default();
        expected.beta = 0.003;
        assert_eq!(cfg.model.params, expected);
        assert_eq!(cfg.model.converters, Converters::default());
    }

    #[test]
    fn non_increasing_converter_names_section_and_line() {
        let err = parse_config("[converter:eta]\n1 1\n0.5 0.2\n").unwrap_err();
        match err {
            Error::Config { line, section, .. } => {
                assert_eq!(line, 3);
                assert_eq!(section, "converter:eta");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_keys_and_malformed_lines() {
        let cases = [
            ("[parameters]\nbetta = 1\n", 2),
            ("[parameters]\nbeta = abc\n", 2),
            ("[parameters]\n\nbeta 0.1\n", 3),
            ("beta = 0.1\n", 1),
            ("[params]\n", 1),
            ("[converter:zeta]\n", 1),
            ("[scenario:x]\nalpha = 0.05\nfold = 2\n", 3),
            ("[scenario:x]\njob_fold = 2\n", 1),
            ("[parameters]\nbeta = 0.1\nbeta = 0.2\n", 3),
            ("[parameters]\nomega = 1.5\n", 2),
            ("[converter:eta]\n1 2 3\n", 2),
            ("[converter:theta]\n0 1\n", 2),
            ("[scenario:baseline]\n", 1),
            ("[parameters]\nconverter_input = sideways\n", 2),
        ];
        for (doc, want) in cases {
            match parse_config(doc) {
                Err(Error::Config { line, .. }) => assert_eq!(line, want, "{doc:?}"),
                other => panic!("{doc:?}: expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_scenarios() {
        let doc = "# header\n[parameters] # trailing\nalpha = 0.02\n\n[scenario:b]\njob_fold = 3\n[scenario:hi]\nalpha = 0.2\nramp_start = 2030\nnotes = stress case\n";
        let cfg = parse_config(doc).unwrap();
        assert_eq!(cfg.scenario("baseline").unwrap().alpha, 0.02);
        let b = cfg.scenario("b").unwrap();
        assert_eq!((b.alpha, b.job_fold), (0.07, 3.0));
        let hi = cfg.scenario("hi").unwrap();
        assert_eq!(hi.ramp_start, Some(2030.0));
        assert_eq!(hi.notes, "stress case");
    }

    #[test]
    fn render_round_trips() {
        let doc = "[parameters]\nbeta = 0.0123456789\nconverter_input = baseline\n[converter:prices]\n0 1.5\n2 0.75\n[scenario:z]\nalpha = 0.033\njob_fold = 4.5\n";
        let cfg = parse_config(doc).unwrap();
        let again = parse_config(&render_config(&cfg)).unwrap();
        assert_eq!(cfg, again);
    }
}
