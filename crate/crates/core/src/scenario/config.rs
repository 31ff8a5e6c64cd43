//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! source.kind = wcs
//! source.signal_mu = 0.4
//! grid.stop = 300
//! finite.method = chernoff
//! ```
//!
//! Unset keys keep the defaults of [`Scenario::default`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use super::{Execution, Scenario, SourceSetup, DEFAULT_ODD_WEIGHT};
use crate::error::{Error, Result};
use crate::source::SourceKind;

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                Error::config(line, format!("expected `key = value`, got `{content}`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::config(line, "missing key"));
            }
            if value.is_empty() {
                return Err(Error::config(line, format!("missing value for `{key}`")));
            }
            let entry = Entry {
                line,
                value: value.to_string(),
                used: false,
            };
            if let Some(prev) = map.insert(key.to_string(), entry) {
                return Err(Error::config(
                    line,
                    format!("`{key}` already set on line {}", prev.line),
                ));
            }
        }
        Ok(Entries(map))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(entry) = self.0.get_mut(key) else {
            return Ok(None);
        };
        entry.used = true;
        entry
            .value
            .parse()
            .map(Some)
            .map_err(|e| Error::config(entry.line, format!("bad value for `{key}`: {e}")))
    }

    fn line_of(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.line)
    }

    fn set<T: FromStr>(&mut self, key: &str, target: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.take(key)? {
            *target = v;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        match self.0.iter().find(|(_, e)| !e.used) {
            Some((key, e)) => Err(Error::config(e.line, format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }
}

fn source_setup(
    entries: &mut Entries,
    prefix: &str,
    kind: SourceKind,
    odd_weight: f64,
) -> Result<SourceSetup> {
    let mut setup = match kind {
        SourceKind::NonidealCss => SourceSetup::nonideal_css(odd_weight),
        other => SourceSetup::for_kind(other)
            .map_err(|e| Error::config(entries.line_of(&format!("{prefix}kind")), e.to_string()))?,
    };
    entries.set(&format!("{prefix}signal_mu"), &mut setup.signal_mu)?;
    entries.set(&format!("{prefix}decoy_mu"), &mut setup.decoy_mu)?;
    entries.set(&format!("{prefix}vacuum"), &mut setup.vacuum)?;
    entries.set(&format!("{prefix}estimator"), &mut setup.estimator)?;
    Ok(setup)
}

/// Parses a configuration file body into a scenario.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let mut e = Entries::parse(text)?;
    let mut s = Scenario::default();

    let kind = e
        .take::<SourceKind>("source.kind")?
        .unwrap_or(s.source.kind);
    let odd_weight = e
        .take::<f64>("source.odd_weight")?
        .unwrap_or(DEFAULT_ODD_WEIGHT);
    s.source = source_setup(&mut e, "source.", kind, odd_weight)?;

    let sys = &mut s.system;
    e.set("system.detector_efficiency", &mut sys.detector_efficiency)?;
    e.set("system.dark_count", &mut sys.dark_count)?;
    e.set("system.fiber_loss", &mut sys.fiber_loss)?;
    e.set("system.misalignment", &mut sys.misalignment)?;
    e.set("system.ec_efficiency", &mut sys.ec_efficiency)?;

    e.set("grid.start", &mut s.grid.start)?;
    e.set("grid.stop", &mut s.grid.stop)?;
    e.set("grid.step", &mut s.grid.step)?;

    e.set("finite.method", &mut s.finite.method)?;
    e.set("finite.pulses", &mut s.finite.pulse_pairs)?;
    e.set("finite.sigmas", &mut s.finite.sigmas)?;
    e.set("finite.epsilon", &mut s.finite.epsilon)?;

    e.set("optics.cutoff", &mut s.cutoff)?;
    e.set("optics.tail_tolerance", &mut s.tail_tolerance)?;

    let compare_odd = e
        .take::<f64>("compare.odd_weight")?
        .unwrap_or(DEFAULT_ODD_WEIGHT);
    let kinds = match e.take::<String>("compare.sources")? {
        Some(list) => {
            let line = e.line_of("compare.sources");
            list.split(',')
                .map(|k| {
                    k.trim()
                        .parse::<SourceKind>()
                        .map_err(|m| Error::config(line, m.to_string()))
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => s.compare.iter().map(|c| c.kind).collect(),
    };
    s.compare = kinds
        .into_iter()
        .map(|k| source_setup(&mut e, &format!("compare.{}.", k.as_str()), k, compare_odd))
        .collect::<Result<_>>()?;

    let g = &mut s.intensity_grid;
    e.set("optimize.mu1_min", &mut g.mu1.min)?;
    e.set("optimize.mu1_max", &mut g.mu1.max)?;
    e.set("optimize.mu1_steps", &mut g.mu1.steps)?;
    e.set("optimize.mu2_min", &mut g.mu2.min)?;
    e.set("optimize.mu2_max", &mut g.mu2.max)?;
    e.set("optimize.mu2_steps", &mut g.mu2.steps)?;

    e.set("yields.distance_km", &mut s.yields_distance)?;

    if let Some(parallel) = e.take::<bool>("run.parallel")? {
        s.execution = if parallel {
            Execution::Parallel
        } else {
            Execution::Serial
        };
    }
    if let Some(path) = e.take::<PathBuf>("output.path")? {
        s.output = Some(path);
    }

    e.finish()?;
    Ok(s)
}
