//! Flat key-value run configuration.
//!
//! A config file is either a flat JSON object or `key = value` lines with `#`
//! comments. Every key must be one of [`KEYS`]; anything else is rejected.

use std::collections::BTreeMap;
use std::path::Path;

use nvq_core::blocks::Sizes;
use nvq_core::cycles::CycleKind;
use nvq_core::model::ModelParams;
use nvq_core::numerics::linspace;
use nvq_core::spectral::{SpectralOptions, SweepParam};
use nvq_core::thermo::GapOperator;
use nvq_core::HalfInt;

use crate::Failure;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "NVQ_CONFIG";

/// `(key, default, meaning)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("model.D", "2.878", "zero-field splitting (GHz)"),
    ("model.E", "0.26", "strain constant (GHz)"),
    ("model.G", "1.73", "pairing constant (GHz)"),
    ("model.g", "1.73", "qubit-ensemble coupling (GHz)"),
    ("model.alpha", "1", "coupling asymmetry"),
    ("model.eps1", "-1", "first pairing level (GHz)"),
    ("model.eps2", "1", "second pairing level (GHz)"),
    ("model.muS", "0", "NV chemical potential (GHz)"),
    ("model.muQb", "0", "pair chemical potential (GHz)"),
    ("system.Omega", "4", "NV sublevel degeneracy, N_S = 2 Omega"),
    ("system.Omega1", "2", "pair states on level 1"),
    ("system.Omega2", "2", "pair states on level 2"),
    ("spectral.im_tol", "1e-9", "largest |Im E| treated as real (GHz)"),
    ("spectral.tie_tol", "1e-7", "energy tie tolerance (GHz)"),
    ("spectral.defect_tol", "1e-6", "biorthogonal quality floor"),
    ("gap.operator", "collective", "collective | diagonal"),
    ("grid.T", "0.1:3.75:11", "temperatures (GHz): lo:hi:n or a,b,c"),
    ("grid.alpha", "0:1.2:100", "asymmetries"),
    ("grid.g", "0.346:3.46:10", "couplings (GHz)"),
    ("grid.S", "2:12:21", "cycle entropies"),
    ("eps.param", "alpha", "swept parameter: alpha | g"),
    ("eps.range", "0.01:1.2:120", "sweep range lo:hi:coarse_steps"),
    ("eps.precision", "1e-9", "bracketing width"),
    ("eps.step", "0.01", "walk step for first EPs about alpha = 1"),
    ("eps.alpha_max", "100", "walk limit above alpha = 1"),
    ("cycle.kind", "carnot", "carnot | stirling"),
    ("cycle.bracket", "0:5", "alpha search bracket lo:hi"),
    ("cycle.scan_steps", "201", "alpha scan points for Carnot corners"),
    ("cycle.include_eps", "true", "add EP locations to the Stirling alpha grid"),
    ("thermo.nv_counts", "", "NV counts for rescaled curves (empty: use system.*)"),
    ("rescale.np", "2,3,4", "pair counts to fit"),
    ("rescale.target", "2.878", "target low-temperature gap (GHz)"),
    ("rescale.T", "0.05", "temperature of the target gap (GHz)"),
    ("rescale.G0", "3.006", "pairing scale (GHz)"),
    ("oracle.beta", "0.1,1,5,20", "inverse temperatures (1/GHz)"),
    ("oracle.tol", "1e-8", "oracle agreement tolerance"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect() }
    }
}

fn unknown_key(key: &str) -> Failure {
    let valid: Vec<&str> = KEYS.iter().map(|k| k.0).collect();
    Failure::request(format!("unknown config key '{key}'; valid keys: {}", valid.join(", ")))
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        serde_json::Value::Array(items) => {
            items.iter().map(json_scalar).collect::<Option<Vec<_>>>().map(|v| v.join(","))
        }
        _ => None,
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_string();
                Ok(())
            }
            None => Err(unknown_key(key)),
        }
    }

    /// Applies `KEY=VALUE`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), Failure> {
        let (k, v) = pair.split_once('=').ok_or_else(|| Failure::request(format!("expected KEY=VALUE, got '{pair}'")))?;
        self.set(k.trim(), v)
    }

    pub fn parse_text(&mut self, text: &str) -> Result<(), Failure> {
        if text.trim_start().starts_with('{') {
            let json: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Failure::request(format!("config JSON: {e}")))?;
            let obj = json.as_object().ok_or_else(|| Failure::request("config JSON must be an object".into()))?;
            for (k, v) in obj {
                let s = json_scalar(v).ok_or_else(|| Failure::request(format!("config key '{k}' must be a scalar or list")))?;
                self.set(k, &s)?;
            }
            return Ok(());
        }
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::request(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim().trim_matches('"'))?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::request(format!("cannot read config {}: {e}", path.display())))?;
        self.parse_text(&text)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("key from KEYS")
    }

    pub fn f64(&self, key: &str) -> Result<f64, Failure> {
        let v = self.get(key);
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Failure::request(format!("{key} = '{v}' is not a finite number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize, Failure> {
        let v = self.get(key);
        v.parse().map_err(|_| Failure::request(format!("{key} = '{v}' is not a non-negative integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool, Failure> {
        let v = self.get(key);
        v.parse().map_err(|_| Failure::request(format!("{key} = '{v}' is not true/false")))
    }

    fn half(&self, key: &str) -> Result<HalfInt, Failure> {
        let v = self.get(key);
        let x = match v.split_once('/') {
            Some((a, b)) => a.trim().parse::<f64>().ok().zip(b.trim().parse::<f64>().ok()).map(|(a, b)| a / b),
            None => v.parse().ok(),
        };
        x.and_then(|x| HalfInt::from_f64(x).ok())
            .ok_or_else(|| Failure::request(format!("{key} = '{v}' is not a half-integer")))
    }

    fn int(&self, key: &str) -> Result<i64, Failure> {
        let v = self.get(key);
        v.parse().map_err(|_| Failure::request(format!("{key} = '{v}' is not an integer")))
    }

    /// Non-empty strictly increasing grid from `lo:hi:n` or a comma list.
    pub fn grid(&self, key: &str) -> Result<Vec<f64>, Failure> {
        let v = self.get(key);
        let bad = || Failure::request(format!("{key} = '{v}' is not a grid (lo:hi:n or a,b,c)"));
        let pts: Vec<f64> = if v.contains(':') {
            let parts: Vec<&str> = v.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
            linspace(lo, hi, n)
        } else if v.trim().is_empty() {
            Vec::new()
        } else {
            v.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        if pts.is_empty() {
            return Err(Failure::request(format!("{key} is an empty grid")));
        }
        if pts.iter().any(|x| !x.is_finite()) || pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Failure::request(format!("{key} must be finite and strictly increasing")));
        }
        Ok(pts)
    }

    pub fn int_list(&self, key: &str) -> Result<Vec<i64>, Failure> {
        let v = self.get(key);
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| s.trim().parse::<i64>().map_err(|_| Failure::request(format!("{key} = '{v}' is not an integer list"))))
            .collect()
    }

    /// `lo:hi` pair.
    pub fn range(&self, key: &str) -> Result<(f64, f64), Failure> {
        let v = self.get(key);
        let bad = || Failure::request(format!("{key} = '{v}' is not lo:hi with lo < hi"));
        let (a, b) = v.split_once(':').ok_or_else(bad)?;
        let lo: f64 = a.trim().parse().map_err(|_| bad())?;
        let hi: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(lo < hi) {
            return Err(bad());
        }
        Ok((lo, hi))
    }

    pub fn sizes(&self) -> Result<Sizes, Failure> {
        Ok(Sizes::new(self.half("system.Omega")?, self.int("system.Omega1")?, self.int("system.Omega2")?)?)
    }

    pub fn model(&self) -> Result<ModelParams, Failure> {
        let p = ModelParams {
            d: self.f64("model.D")?,
            e: self.f64("model.E")?,
            pairing: self.f64("model.G")?,
            coupling: self.f64("model.g")?,
            alpha: self.f64("model.alpha")?,
            eps1: self.f64("model.eps1")?,
            eps2: self.f64("model.eps2")?,
            mu_s: self.f64("model.muS")?,
            mu_qb: self.f64("model.muQb")?,
            sizes: self.sizes()?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn spectral(&self) -> Result<SpectralOptions, Failure> {
        let o = SpectralOptions {
            im_tol: self.f64("spectral.im_tol")?,
            tie_tol: self.f64("spectral.tie_tol")?,
            defect_tol: self.f64("spectral.defect_tol")?,
        };
        if !(o.im_tol > 0.0 && o.tie_tol > 0.0 && o.defect_tol > 0.0) {
            return Err(Failure::request("spectral tolerances must be positive".into()));
        }
        Ok(o)
    }

    pub fn gap(&self) -> Result<GapOperator, Failure> {
        self.get("gap.operator").parse().map_err(|e: nvq_core::Error| Failure::request(e.to_string()))
    }

    pub fn cycle_kind(&self) -> Result<CycleKind, Failure> {
        self.get("cycle.kind").parse().map_err(|e: nvq_core::Error| Failure::request(e.to_string()))
    }

    pub fn sweep_param(&self) -> Result<SweepParam, Failure> {
        match self.get("eps.param") {
            "alpha" => Ok(SweepParam::Alpha),
            "g" => Ok(SweepParam::Coupling),
            other => Err(Failure::request(format!("eps.param = '{other}' (expected alpha|g)"))),
        }
    }
}
