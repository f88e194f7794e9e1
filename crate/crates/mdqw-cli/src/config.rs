//! Configuration plumbing: an optional plain-text `key=value` file whose
//! keys mirror the long command-line flags, merged so that explicit flags
//! win; plus the small parsers shared by flags and file values (integer
//! lists with `a..b` range tokens, hop lengths with the `IJ` literal, and
//! detector-policy assembly with friendly validation messages).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use mdqw_core::analysis::HopSpec;
use mdqw_core::DetectorPolicy;

/// Every key a configuration file may define; identical to the long flag
/// names. Anything else is rejected before any simulation starts.
const KNOWN_KEYS: &[&str] = &[
    "mode",
    "xd",
    "n",
    "s",
    "t-off",
    "T",
    "out",
    "format",
    "snapshot",
    "site",
    "events",
    "absorbed",
    "n-list",
    "s-list",
    "xd-list",
    "r-list",
    "gamma",
    "delta",
    "t",
    "r-min",
    "r-max",
    "inverse-square",
];

/// Parsed `key=value` file contents.
#[derive(Debug, Default)]
pub struct FileConfig {
    map: BTreeMap<String, String>,
}

impl FileConfig {
    /// Load and validate a configuration file; `None` yields an empty
    /// config. Lines are `key=value`; blank lines and `#` comments are
    /// ignored; unknown keys and repeated keys are errors.
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "config line {} is not key=value: '{line}'",
                    lineno + 1
                ));
            };
            let key = key.trim().to_owned();
            let value = value.trim().to_owned();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(format!("unknown config key '{key}'"));
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(format!("config key '{key}' given twice"));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// Flag value if given, else the parsed config-file value.
    pub fn merge<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config value '{text}' for '{key}' is invalid")),
        }
    }

    /// Flag string if given, else the raw config-file value.
    pub fn merge_str(&self, flag: Option<String>, key: &str) -> Option<String> {
        flag.or_else(|| self.get(key).map(str::to_owned))
    }

    /// A switch is on if the flag was passed or the config sets the key to
    /// `true` or `1`.
    pub fn merge_switch(&self, flag: bool, key: &str) -> Result<bool, String> {
        if flag {
            return Ok(true);
        }
        match self.get(key) {
            None => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(other) => Err(format!(
                "config value '{other}' for '{key}' is not a boolean"
            )),
        }
    }
}

/// Comma-separated integers, where each token is a number or an inclusive
/// range `a..b`.
pub fn parse_int_list(text: &str) -> Result<Vec<i64>, String> {
    let mut out = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if let Some((a, b)) = token.split_once("..") {
            let a: i64 = a.trim().parse().map_err(|_| bad_token(token))?;
            let b: i64 = b.trim().parse().map_err(|_| bad_token(token))?;
            if a > b {
                return Err(format!("empty range '{token}'"));
            }
            out.extend(a..=b);
        } else {
            out.push(token.parse().map_err(|_| bad_token(token))?);
        }
    }
    Ok(out)
}

/// As [`parse_int_list`], restricted to values that fit in `u32`.
pub fn parse_u32_list(text: &str) -> Result<Vec<u32>, String> {
    parse_int_list(text)?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| format!("value {v} out of range")))
        .collect()
}

/// Hop lengths: integers, ranges, or the literal `IJ` (infinite jump).
pub fn parse_hop_list(text: &str) -> Result<Vec<HopSpec>, String> {
    let mut out = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if token.eq_ignore_ascii_case("ij") {
            out.push(HopSpec::Infinite);
        } else {
            for v in parse_u32_list(token)? {
                out.push(HopSpec::Finite(v));
            }
        }
    }
    Ok(out)
}

fn bad_token(token: &str) -> String {
    format!("cannot parse '{token}' as an integer or range")
}

/// Assemble a detector policy from the resolved mode and parameters,
/// validating up front so mistakes surface as usage errors.
pub fn build_policy(
    mode: &str,
    xd: Option<i64>,
    n: Option<u32>,
    s: Option<HopSpec>,
    t_off: Option<u64>,
) -> Result<DetectorPolicy, String> {
    let need_xd = || -> Result<i64, String> {
        let xd = xd.ok_or_else(|| format!("mode '{mode}' needs --xd"))?;
        if xd < 1 {
            return Err("x_D must be positive".into());
        }
        Ok(xd)
    };
    let need_n = || -> Result<u32, String> {
        let n = n.ok_or_else(|| format!("mode '{mode}' needs --n"))?;
        if n < 1 {
            return Err("n must be at least 1".into());
        }
        Ok(n)
    };
    match mode {
        "iw" => Ok(DetectorPolicy::None),
        "fixed" => Ok(DetectorPolicy::Fixed { x_d: need_xd()? }),
        "moving" => {
            let x_d = need_xd()?;
            let n = need_n()?;
            match s.ok_or("mode 'moving' needs --s (a hop length or IJ)")? {
                HopSpec::Finite(s) if s >= 1 => Ok(DetectorPolicy::Moving { x_d, n, s }),
                HopSpec::Finite(_) => Err("s must be at least 1".into()),
                HopSpec::Infinite => Ok(DetectorPolicy::MovingIj { x_d, n }),
            }
        }
        "ij" => Ok(DetectorPolicy::MovingIj {
            x_d: need_xd()?,
            n: need_n()?,
        }),
        "quench" => {
            let x_d = need_xd()?;
            let t_off = t_off.ok_or("mode 'quench' needs --t-off")?;
            if t_off < 1 {
                return Err("t_off must be at least 1".into());
            }
            Ok(DetectorPolicy::Quench { x_d, t_off })
        }
        other => Err(format!(
            "unknown mode '{other}' (expected iw, fixed, moving, ij, or quench)"
        )),
    }
}
