//! JSON wave descriptions built from smooth bumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CauchyData;
use crate::grid::GridSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Bump,
    GaussianMollifiedBump,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    F,
    G,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Component {
    pub kind: ComponentKind,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Gaussian width; defaults to half the radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub target: Target,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<Component>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WaveSpec {
    pub schema_version: u32,
    #[serde(flatten)]
    pub grid: GridSpec,
    #[serde(default)]
    pub m: f64,
    pub components: Vec<Component>,
}

/// `exp(−1/(1 − x²))` on `|x| < 1`, zero outside.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

impl Component {
    pub fn bump(center: Vec<f64>, radius: f64, amplitude: f64, target: Target) -> Self {
        Self {
            kind: ComponentKind::Bump,
            center: Some(center),
            radius: Some(radius),
            amplitude,
            sigma: None,
            target,
            terms: Vec::new(),
        }
    }

    fn validate(&self, d: usize, radial: bool) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::Config("amplitude must be finite".into()));
        }
        if self.kind == ComponentKind::Sum {
            if self.terms.is_empty() {
                return Err(Error::Config("a sum component needs terms".into()));
            }
            return self.terms.iter().try_for_each(|t| t.validate(d, radial));
        }
        match self.radius {
            Some(r) if r > 0.0 && r.is_finite() => {}
            _ => return Err(Error::Config("component radius must be positive".into())),
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0) || self.kind != ComponentKind::GaussianMollifiedBump {
                return Err(Error::Config("sigma must be positive and belongs to gaussian-mollified-bump".into()));
            }
        }
        if let Some(c) = &self.center {
            if c.len() != d {
                return Err(Error::Config(format!("center has {} coordinates, grid has d = {d}", c.len())));
            }
            if radial && c.iter().any(|&x| x != 0.0) {
                return Err(Error::Config("radial3d components must be centred at the origin".into()));
            }
        }
        Ok(())
    }

    /// Adds the component to `(f, g)`.
    fn accumulate(&self, grid: &GridSpec, scale: f64, f: &mut [f64], g: &mut [f64]) {
        let amp = scale * self.amplitude;
        if self.kind == ComponentKind::Sum {
            for t in &self.terms {
                t.accumulate(grid, amp, f, g);
            }
            return;
        }
        let a = self.radius.unwrap_or(1.0);
        let sigma = self.sigma.unwrap_or(0.5 * a);
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
        let out = match self.target {
            Target::F => f,
            Target::G => g,
        };
        for (o, r) in out.iter_mut().zip(grid.distances(&center)) {
            let mut v = bump(r / a);
            if self.kind == ComponentKind::GaussianMollifiedBump {
                v *= (-r * r / (2.0 * sigma * sigma)).exp();
            }
            *o += amp * v;
        }
    }
}

impl WaveSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("wave spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schemaVersion {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.grid.validate()?;
        if !(self.m >= 0.0) || !self.m.is_finite() {
            return Err(Error::Config(format!("mass must be finite and non-negative, got {}", self.m)));
        }
        if self.components.is_empty() {
            return Err(Error::Config("wave spec has no components".into()));
        }
        let (d, radial) = (self.grid.dim(), self.grid.is_radial());
        self.components.iter().try_for_each(|c| c.validate(d, radial))
    }

    /// Samples the wave on its grid.
    pub fn build(&self) -> Result<CauchyData> {
        self.validate()?;
        let n = self.grid.len();
        let (mut f, mut g) = (vec![0.0; n], vec![0.0; n]);
        for c in &self.components {
            c.accumulate(&self.grid, 1.0, &mut f, &mut g);
        }
        CauchyData::new(self.grid.clone(), f, g, self.m)
    }

    /// Largest component reach `|center| + radius`.
    pub fn support_radius(&self) -> f64 {
        fn reach(c: &Component) -> f64 {
            if c.kind == ComponentKind::Sum {
                return c.terms.iter().map(reach).fold(0.0, f64::max);
            }
            let off = c.center.as_ref().map_or(0.0, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt());
            off + c.radius.unwrap_or(0.0)
        }
        self.components.iter().map(reach).fold(0.0, f64::max)
    }
}
