use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{Module, Param};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub lr: f64,
    /// Accumulator decay ρ.
    pub rho: f64,
    pub eps: f64,
    /// Rescale the global gradient norm down to this value when exceeded.
    pub clip_norm: Option<f64>,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            rho: 0.9,
            eps: 1e-8,
            clip_norm: None,
        }
    }
}

impl RmsPropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::config("rho", "must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", "must be positive"));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::config("clip_norm", "must be positive"));
            }
        }
        Ok(())
    }
}

/// `v ← ρv + (1−ρ)g²`, `θ ← θ − lr·g / (√v + ε)`, elementwise.
pub fn rmsprop_update(value: &mut [f64], grad: &[f64], v: &mut [f64], cfg: &RmsPropConfig, grad_scale: f64) {
    for ((t, &g), a) in value.iter_mut().zip(grad).zip(v.iter_mut()) {
        let g = g * grad_scale;
        *a = cfg.rho * *a + (1.0 - cfg.rho) * g * g;
        *t -= cfg.lr * g / (a.sqrt() + cfg.eps);
    }
}

/// RMSProp over every trainable [`Param`] of a module, with accumulators keyed by name.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsProp {
    config: RmsPropConfig,
    accumulators: BTreeMap<String, Vec<f64>>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            accumulators: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &RmsPropConfig {
        &self.config
    }

    pub fn accumulator(&self, name: &str) -> Option<&[f64]> {
        self.accumulators.get(name).map(Vec::as_slice)
    }

    pub fn accumulators(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.accumulators.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn set_accumulator(&mut self, name: &str, v: Vec<f64>) {
        self.accumulators.insert(name.to_string(), v);
    }

    /// Applies one update from the accumulated gradients. Nothing is modified when any
    /// gradient is non-finite; the error names the offending parameter.
    pub fn step(&mut self, module: &mut dyn Module) -> Result<()> {
        let mut bad = None;
        let mut sq_norm = 0.0;
        module.visit_params("", &mut |name, p| {
            if p.trainable {
                if bad.is_none() && !p.grad.iter().all(|g| g.is_finite()) {
                    bad = Some(name.to_string());
                }
                sq_norm += p.grad.iter().map(|g| g * g).sum::<f64>();
            }
        });
        if let Some(name) = bad {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
        let scale = match self.config.clip_norm {
            Some(c) if sq_norm.sqrt() > c => c / sq_norm.sqrt(),
            _ => 1.0,
        };
        let cfg = &self.config;
        let acc = &mut self.accumulators;
        module.visit_params_mut("", &mut |name, p: &mut Param| {
            if p.trainable {
                let v = acc.entry(name.to_string()).or_insert_with(|| vec![0.0; p.len()]);
                rmsprop_update(&mut p.value, &p.grad, v, cfg, scale);
            }
        });
        Ok(())
    }
}
