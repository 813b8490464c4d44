use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::coeff::{builtin, dyadic_radii, FamilyDescriptor};
use crate::criteria::CriteriaSettings;
use crate::dynsys::ProbeSettings;
use crate::error::{Error, Result};
use crate::pdelab::PdeSettings;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Validate,
    Moments,
    Probes,
    Criteria,
    Pde,
    Compare,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Validate => "validate",
            Analysis::Moments => "moments",
            Analysis::Probes => "probes",
            Analysis::Criteria => "criteria",
            Analysis::Pde => "pde",
            Analysis::Compare => "compare",
        }
    }
}

/// A named family: a built-in when only `name` is given, otherwise the
/// remaining keys form a descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyEntry {
    pub name: String,
    pub descriptor: FamilyDescriptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSettings {
    pub nodes_per_circle: usize,
    /// Allowed excess of the sampled oscillation over the declared modulus.
    pub slack: f64,
    /// Tail tolerance of the Dini classification.
    pub dini_tol: f64,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        Self { nodes_per_circle: 64, slack: 1e-12, dini_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub schema: u64,
    pub families: Vec<FamilyEntry>,
    /// Executed in dependency order regardless of the listed order.
    pub analyses: Vec<Analysis>,
    /// Strictly decreasing, in `(0, 1]`.
    pub radii: Vec<f64>,
    /// Strictly increasing times of the reduction check.
    pub t_grid: Vec<f64>,
    pub validate: ValidateSettings,
    pub probes: ProbeSettings,
    pub criteria: CriteriaSettings,
    pub pde: PdeSettings,
    /// Fills the seed of trig-polynomial descriptors that omit it.
    pub seed: u64,
    pub threads: Option<usize>,
}

fn default_t_grid() -> Vec<f64> {
    (0..=58).map(|k| 1.0 + 0.5 * k as f64).collect()
}

const KEYS: [&str; 11] =
    ["schema", "families", "analyses", "radii", "t_grid", "validate", "probes", "criteria", "pde", "seed", "threads"];

fn field<T: for<'de> Deserialize<'de>>(obj: &Map<String, Value>, key: &str, errs: &mut Vec<String>) -> Option<T> {
    let v = obj.get(key)?;
    match serde_json::from_value(v.clone()) {
        Ok(t) => Some(t),
        Err(e) => {
            errs.push(format!("{key}: {e}"));
            None
        }
    }
}

fn family_entry(i: usize, v: &Value, seed: u64, errs: &mut Vec<String>) -> Option<FamilyEntry> {
    let Some(obj) = v.as_object() else {
        errs.push(format!("families[{i}]: expected an object"));
        return None;
    };
    let Some(name) = obj.get("name").and_then(Value::as_str) else {
        errs.push(format!("families[{i}]: missing string key `name`"));
        return None;
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        errs.push(format!("families[{i}]: name `{name}` must be nonempty and use only [A-Za-z0-9_-]"));
        return None;
    }
    let mut rest = obj.clone();
    rest.remove("name");
    if rest.is_empty() {
        return match builtin(name) {
            Some(descriptor) => Some(FamilyEntry { name: name.to_string(), descriptor }),
            None => {
                errs.push(format!("families[{i}]: unknown built-in family `{name}`"));
                None
            }
        };
    }
    if rest.get("family").and_then(Value::as_str) == Some("trig_poly") && !rest.contains_key("seed") {
        rest.insert("seed".into(), Value::from(seed));
    }
    match serde_json::from_value::<FamilyDescriptor>(Value::Object(rest)) {
        Ok(descriptor) => Some(FamilyEntry { name: name.to_string(), descriptor }),
        Err(e) => {
            errs.push(format!("families[{i}] ({name}): {e}"));
            None
        }
    }
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("tolerances must be positive: {name} = {v}"));
    }
}

/// Parses and checks a configuration, reporting every violation found.
pub fn validate_config(raw: &str) -> Result<AnalysisConfig> {
    let value: Value = serde_json::from_str(raw).map_err(|e| Error::Config(vec![format!("invalid JSON: {e}")]))?;
    let Some(obj) = value.as_object() else {
        return Err(Error::Config(vec!["configuration must be a JSON object".into()]));
    };
    let mut errs = Vec::new();
    for key in obj.keys() {
        if !KEYS.contains(&key.as_str()) {
            errs.push(format!("unknown key `{key}`"));
        }
    }
    let schema = match obj.get("schema").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => SCHEMA_VERSION,
        Some(other) => {
            errs.push(format!("unsupported schema {other}, expected {SCHEMA_VERSION}"));
            other
        }
        None => {
            errs.push(format!("missing integer key `schema` (expected {SCHEMA_VERSION})"));
            0
        }
    };
    let seed = field::<u64>(obj, "seed", &mut errs).unwrap_or(0);
    let threads = field::<Option<usize>>(obj, "threads", &mut errs).flatten();
    if threads == Some(0) {
        errs.push("threads must be at least 1".into());
    }

    let mut families = Vec::new();
    match obj.get("families").and_then(Value::as_array) {
        Some(list) if !list.is_empty() => {
            for (i, v) in list.iter().enumerate() {
                if let Some(entry) = family_entry(i, v, seed, &mut errs) {
                    if families.iter().any(|f: &FamilyEntry| f.name == entry.name) {
                        errs.push(format!("duplicate family name `{}`", entry.name));
                    }
                    families.push(entry);
                }
            }
        }
        Some(_) => errs.push("families must be nonempty".into()),
        None => errs.push("missing array key `families`".into()),
    }

    let mut analyses: Vec<Analysis> = match obj.get("analyses") {
        Some(_) => field(obj, "analyses", &mut errs).unwrap_or_default(),
        None => {
            errs.push("missing array key `analyses`".into());
            Vec::new()
        }
    };
    if obj.contains_key("analyses") && analyses.is_empty() && !errs.iter().any(|e| e.starts_with("analyses:")) {
        errs.push("analyses must be nonempty".into());
    }
    analyses.sort();
    let before = analyses.len();
    analyses.dedup();
    if analyses.len() != before {
        errs.push("analyses must not repeat".into());
    }
    if analyses.contains(&Analysis::Compare) && !analyses.contains(&Analysis::Pde) {
        errs.push("compare requires pde".into());
    }

    let radii = field::<Vec<f64>>(obj, "radii", &mut errs).unwrap_or_else(|| dyadic_radii(20));
    if radii.is_empty() {
        errs.push("radii must be nonempty".into());
    }
    if radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        errs.push("radii must lie in (0, 1]".into());
    }
    if radii.windows(2).any(|w| w[0] <= w[1]) {
        errs.push("radii must be sorted strictly decreasing".into());
    }
    let t_grid = field::<Vec<f64>>(obj, "t_grid", &mut errs).unwrap_or_else(default_t_grid);
    if t_grid.is_empty() {
        errs.push("t_grid must be nonempty".into());
    }
    if t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        errs.push("t_grid entries must be finite and nonnegative".into());
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        errs.push("t_grid must be sorted strictly increasing".into());
    }

    let validate = field::<ValidateSettings>(obj, "validate", &mut errs).unwrap_or_default();
    positive(&mut errs, "validate.slack", validate.slack);
    positive(&mut errs, "validate.dini_tol", validate.dini_tol);
    if validate.nodes_per_circle < crate::quadrature::MIN_CIRCLE_NODES {
        errs.push(format!("validate.nodes_per_circle must be >= {}", crate::quadrature::MIN_CIRCLE_NODES));
    }
    let probes = field::<ProbeSettings>(obj, "probes", &mut errs).unwrap_or_default();
    if let Err(Error::Config(v)) = probes.check() {
        errs.extend(v.into_iter().map(|m| format!("probes: {m}")));
    }
    let criteria = field::<CriteriaSettings>(obj, "criteria", &mut errs).unwrap_or_default();
    if let Err(Error::Config(v)) = criteria.check() {
        errs.extend(v.into_iter().map(|m| format!("criteria: {m}")));
    }
    let pde = field::<PdeSettings>(obj, "pde", &mut errs).unwrap_or_default();
    errs.extend(pde.violations());

    if errs.is_empty() {
        Ok(AnalysisConfig { schema, families, analyses, radii, t_grid, validate, probes, criteria, pde, seed, threads })
    } else {
        Err(Error::Config(errs))
    }
}
