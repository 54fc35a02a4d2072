//! Parameter resolution: defaults < config file (`key=value`, `#` comments)
//! < explicit command-line flags. Also the `start:stop:count` range syntax
//! used by `--range`.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use cvdistill::ProtocolParams;
use cvdistill::scan::linspace;

/// An inclusive evenly spaced grid written as `start:stop:count`.
#[derive(Debug, Clone)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        linspace(self.start, self.stop, self.count).map_err(|e| e.to_string())
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be start:stop:count, got {s:?}"));
        }
        let start: f64 = parts[0].parse().map_err(|_| format!("bad range start {:?}", parts[0]))?;
        let stop: f64 = parts[1].parse().map_err(|_| format!("bad range stop {:?}", parts[1]))?;
        let count: usize =
            parts[2].parse().map_err(|_| format!("bad range count {:?}", parts[2]))?;
        if count == 0 {
            return Err("range count must be at least 1".into());
        }
        Ok(RangeSpec { start, stop, count })
    }
}

/// The shared numeric flags every subcommand accepts. `None` means "not
/// given on the command line", so a config-file value (and then the built-in
/// default) can fill it.
#[derive(Debug, Clone, Copy, Default, clap::Args)]
pub struct ParamArgs {
    /// Source two-mode squeezing λ ∈ [0, 1)
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Tap beam-splitter transmittance T ∈ (0, 1]
    #[arg(long = "T", global = true)]
    pub transmittance: Option<f64>,
    /// Auxiliary gain κ² (negative values allowed)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa2: Option<f64>,
    /// Channel transmittance η ∈ (0, 1]
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Copy count M ≥ 2
    #[arg(long = "M", global = true)]
    pub copies: Option<usize>,
    /// Fock lattice cutoff per signal mode
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    /// Tolerance override (check gates, iteration convergence)
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

/// Fully resolved parameters after merging flags, config file, and defaults.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub lambda: f64,
    pub transmittance: f64,
    pub kappa2: f64,
    pub eta: f64,
    pub copies: usize,
    pub cutoff: Option<usize>,
    pub tol: Option<f64>,
}

impl Resolved {
    pub fn protocol(&self) -> cvdistill::Result<ProtocolParams> {
        ProtocolParams::new(self.lambda, self.transmittance)?
            .with_kappa2(self.kappa2)?
            .with_eta(self.eta)?
            .with_copies(self.copies)
    }

    pub fn cutoff_or(&self, default: usize) -> usize {
        self.cutoff.unwrap_or(default)
    }

    /// Provenance pairs in a fixed order (deterministic output headers).
    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("lambda".into(), self.lambda.to_string()),
            ("T".into(), self.transmittance.to_string()),
            ("kappa2".into(), self.kappa2.to_string()),
            ("eta".into(), self.eta.to_string()),
            ("M".into(), self.copies.to_string()),
        ];
        if let Some(c) = self.cutoff {
            rows.push(("cutoff".into(), c.to_string()));
        }
        if let Some(t) = self.tol {
            rows.push(("tol".into(), t.to_string()));
        }
        rows
    }
}

/// Parse a `key=value` config file. Blank lines and `#` comments (whole-line
/// or trailing) are ignored; keys are the long flag names.
pub fn parse_config(path: &Path) -> Result<HashMap<String, String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "config {}:{}: expected key=value, got {raw:?}",
                path.display(),
                idx + 1
            ));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn get_parsed<T: FromStr>(
    map: &HashMap<String, String>,
    keys: &[&str],
) -> Result<Option<T>, String> {
    for key in keys {
        if let Some(raw) = map.get(*key) {
            return raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse {raw:?}"));
        }
    }
    Ok(None)
}

/// Merge precedence: explicit flag, then config value, then built-in default
/// (λ = 0.4, T = 0.8, κ² = 1, η = 1, M = 2; cutoff and tol stay unset).
pub fn resolve(args: &ParamArgs, config: &HashMap<String, String>) -> Result<Resolved, String> {
    let known = [
        "lambda", "T", "transmittance", "kappa2", "eta", "M", "copies", "cutoff", "tol",
    ];
    if let Some(stray) = config.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(format!("config key {stray:?} is not a recognized parameter"));
    }
    Ok(Resolved {
        lambda: args.lambda.or(get_parsed(config, &["lambda"])?).unwrap_or(0.4),
        transmittance: args
            .transmittance
            .or(get_parsed(config, &["T", "transmittance"])?)
            .unwrap_or(0.8),
        kappa2: args.kappa2.or(get_parsed(config, &["kappa2"])?).unwrap_or(1.0),
        eta: args.eta.or(get_parsed(config, &["eta"])?).unwrap_or(1.0),
        copies: args.copies.or(get_parsed(config, &["M", "copies"])?).unwrap_or(2),
        cutoff: match args.cutoff {
            Some(c) => Some(c),
            None => get_parsed(config, &["cutoff"])?,
        },
        tol: match args.tol {
            Some(t) => Some(t),
            None => get_parsed(config, &["tol"])?,
        },
    })
}
