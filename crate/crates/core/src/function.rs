//! Nonnegative, locally bounded test functions `f`.
//!
//! A [`TestFunction`] is a finite sum of closed-form terms. Every built-in
//! term carries an exact primitive, so integrals along linear path pieces and
//! over bins are computed without discretisation error. A user closure can be
//! attached as well; it is integrated by adaptive quadrature.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Zero,
    Constant {
        value: f64,
    },
    /// `scale * exp(-rate * y)`.
    ExpDecay {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        rate: f64,
    },
    /// `scale * (1 + |y|)^(-power)`.
    Reciprocal {
        power: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * (1 + sin(3π/2 + 2πy/span))`, vanishing on `span * Z`.
    LatticeSine {
        span: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `height` on the open interval `(lo, hi)`.
    Indicator {
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// Symmetric triangle on `(lo, hi)` with total area `area`.
    Triangle {
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        area: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Term {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Term::Zero => true,
            Term::Constant { value } => value >= 0.0 && value.is_finite(),
            Term::ExpDecay { scale, rate } => scale >= 0.0 && rate > 0.0 && scale.is_finite(),
            Term::Reciprocal { power, scale } => power > 0.0 && scale >= 0.0 && scale.is_finite(),
            Term::LatticeSine { span, scale } => span > 0.0 && span.is_finite() && scale >= 0.0 && scale.is_finite(),
            Term::Indicator { lo, hi, height } => lo < hi && height >= 0.0 && height.is_finite(),
            Term::Triangle { lo, hi, area } => {
                lo < hi && lo.is_finite() && hi.is_finite() && area >= 0.0 && area.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid_arg(format!("invalid function term {self:?}")))
        }
    }

    #[inline]
    fn eval(&self, y: f64) -> f64 {
        match *self {
            Term::Zero => 0.0,
            Term::Constant { value } => value,
            Term::ExpDecay { scale, rate } => scale * (-rate * y).exp(),
            Term::Reciprocal { power, scale } => scale * (1.0 + y.abs()).powf(-power),
            Term::LatticeSine { span, scale } => scale * (1.0 + (1.5 * PI + 2.0 * PI * (y / span).rem_euclid(1.0)).sin()),
            Term::Indicator { lo, hi, height } => {
                if y > lo && y < hi {
                    height
                } else {
                    0.0
                }
            }
            Term::Triangle { lo, hi, area } => {
                if y <= lo || y >= hi {
                    return 0.0;
                }
                let w = hi - lo;
                let peak = 2.0 * area / w;
                let d = (y - lo).min(hi - y);
                peak * 2.0 * d / w
            }
        }
    }

    /// An antiderivative (Lebesgue primitive).
    #[inline]
    fn primitive(&self, y: f64) -> f64 {
        match *self {
            Term::Zero => 0.0,
            Term::Constant { value } => value * y,
            Term::ExpDecay { scale, rate } => -scale / rate * (-rate * y).exp(),
            Term::Reciprocal { power, scale } => {
                let a = y.abs();
                let g = if (power - 1.0).abs() < 1e-15 {
                    a.ln_1p()
                } else {
                    ((1.0 + a).powf(1.0 - power) - 1.0) / (1.0 - power)
                };
                scale * g.copysign(y)
            }
            Term::LatticeSine { span, scale } => {
                scale * (y - span / (2.0 * PI) * (1.5 * PI + 2.0 * PI * (y / span).rem_euclid(1.0)).cos())
            }
            Term::Indicator { lo, hi, height } => height * (y.clamp(lo, hi) - lo),
            Term::Triangle { lo, hi, area } => {
                if y <= lo {
                    return 0.0;
                }
                if y >= hi {
                    return area;
                }
                let w = hi - lo;
                let peak = 2.0 * area / w;
                let mid = 0.5 * (lo + hi);
                if y <= mid {
                    peak * (y - lo) * (y - lo) / w
                } else {
                    area - peak * (hi - y) * (hi - y) / w
                }
            }
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Term::Zero => None,
            Term::Constant { value } | Term::ExpDecay { scale: value, .. } | Term::Reciprocal { scale: value, .. } => {
                (value > 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY))
            }
            Term::LatticeSine { scale, .. } => (scale > 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY)),
            Term::Indicator { lo, hi, height } => (height > 0.0).then_some((lo, hi)),
            Term::Triangle { lo, hi, area } => (area > 0.0).then_some((lo, hi)),
        }
    }

    fn sup_on(&self, a: f64, b: f64) -> f64 {
        match *self {
            Term::Zero => 0.0,
            Term::Constant { value } => value,
            Term::ExpDecay { scale, rate } => scale * (-rate * a).exp(),
            Term::Reciprocal { power, scale } => {
                let d = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
                scale * (1.0 + d).powf(-power)
            }
            Term::LatticeSine { scale, .. } => 2.0 * scale,
            Term::Indicator { lo, hi, height } => {
                if b > lo && a < hi {
                    height
                } else {
                    0.0
                }
            }
            Term::Triangle { lo, hi, .. } => {
                if b <= lo || a >= hi {
                    return 0.0;
                }
                let mid = 0.5 * (lo + hi);
                let y = mid.clamp(a, b);
                self.eval(y)
            }
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match *self {
            Term::Indicator { lo, hi, .. } => {
                out.extend([lo, hi].into_iter().filter(|v| v.is_finite()));
            }
            Term::Triangle { lo, hi, .. } => out.extend([lo, 0.5 * (lo + hi), hi]),
            Term::Reciprocal { .. } => out.push(0.0),
            _ => {}
        }
    }

    fn scaled(&self, c: f64) -> Term {
        match *self {
            Term::Zero => Term::Zero,
            Term::Constant { value } => Term::Constant { value: c * value },
            Term::ExpDecay { scale, rate } => Term::ExpDecay { scale: c * scale, rate },
            Term::Reciprocal { power, scale } => Term::Reciprocal { power, scale: c * scale },
            Term::LatticeSine { span, scale } => Term::LatticeSine { span, scale: c * scale },
            Term::Indicator { lo, hi, height } => Term::Indicator { lo, hi, height: c * height },
            Term::Triangle { lo, hi, area } => Term::Triangle { lo, hi, area: c * area },
        }
    }

    fn is_step(&self) -> bool {
        matches!(self, Term::Zero | Term::Indicator { .. })
    }
}

/// User-supplied closed form; integrated by quadrature.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Upper bound of `f` on `[a, b]`.
    pub bound: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("name", &self.name).finish()
    }
}

/// Serializable description of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub id: String,
    pub terms: Vec<Term>,
    /// Multiplies every term.
    #[serde(default = "one")]
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    id: String,
    terms: Vec<Term>,
    custom: Option<CustomFn>,
    /// For truncated families (e.g. trap bumps): the construction is only
    /// materialized below this point.
    materialized_to: Option<f64>,
}

impl TestFunction {
    pub fn new(id: impl Into<String>, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(Self { id: id.into(), terms, custom: None, materialized_to: None })
    }

    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        Self::new(spec.id.clone(), spec.terms.clone())?.scaled(spec.scale)
    }

    pub fn zero() -> Self {
        Self::new("zero", vec![Term::Zero]).unwrap()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), vec![Term::Constant { value: c }]).unwrap()
    }

    /// `e^{-y}`.
    pub fn exp_decay() -> Self {
        Self::new("exp(-y)", vec![Term::ExpDecay { scale: 1.0, rate: 1.0 }]).unwrap()
    }

    /// `(1 + |y|)^{-p}`.
    pub fn reciprocal(power: f64) -> Self {
        Self::new(format!("(1+|y|)^-{power}"), vec![Term::Reciprocal { power, scale: 1.0 }]).unwrap()
    }

    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self::new(format!("1({lo},{hi})"), vec![Term::Indicator { lo, hi, height: 1.0 }]).unwrap()
    }

    /// Step function `Σ c_j 1_{(a_j, b_j)}`; intervals must be disjoint.
    pub fn step(id: impl Into<String>, steps: &[(f64, f64, f64)]) -> Result<Self> {
        let mut sorted: Vec<_> = steps.to_vec();
        sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
        if sorted.windows(2).any(|w| w[0].2 > w[1].1) {
            return Err(invalid_arg("step intervals overlap"));
        }
        let terms = sorted.iter().map(|&(c, lo, hi)| Term::Indicator { lo, hi, height: c }).collect();
        Self::new(id, terms)
    }

    pub fn lattice_sine(span: f64) -> Result<Self> {
        Self::new(format!("lattice_sine({span})"), vec![Term::LatticeSine { span, scale: 1.0 }])
    }

    /// User closed form. Nonnegativity is spot-checked on 10^4 points of `window`.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        bound: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        window: (f64, f64),
    ) -> Result<Self> {
        let name = name.into();
        let n = 10_000;
        for i in 0..=n {
            let y = window.0 + (window.1 - window.0) * i as f64 / n as f64;
            let v = f(y);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid_arg(format!("{name}: f({y}) = {v} is not a finite nonnegative value")));
            }
        }
        Ok(Self {
            id: name.clone(),
            terms: Vec::new(),
            custom: Some(CustomFn { name, f: Arc::new(f), bound: Arc::new(bound) }),
            materialized_to: None,
        })
    }

    pub fn with_materialized_to(mut self, upper: f64) -> Self {
        self.materialized_to = Some(upper);
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn materialized_to(&self) -> Option<f64> {
        self.materialized_to
    }

    /// Serializable form; `None` when a custom closure is attached.
    pub fn spec(&self) -> Option<FunctionSpec> {
        if self.custom.is_some() {
            return None;
        }
        Some(FunctionSpec { id: self.id.clone(), terms: self.terms.clone(), scale: 1.0 })
    }

    /// `c * f` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(invalid_arg(format!("scale {c} must be finite and >= 0")));
        }
        if c == 1.0 {
            return Ok(self.clone());
        }
        if self.custom.is_some() {
            return Err(invalid_arg("cannot rescale a custom function"));
        }
        let terms = self.terms.iter().map(|t| t.scaled(c)).collect();
        Ok(Self {
            id: format!("{}*{}", c, self.id),
            terms,
            custom: None,
            materialized_to: self.materialized_to,
        })
    }

    /// Pointwise sum.
    pub fn plus(&self, other: &TestFunction) -> Result<Self> {
        if self.custom.is_some() || other.custom.is_some() {
            return Err(invalid_arg("sum requires built-in terms"));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            id: format!("{}+{}", self.id, other.id),
            terms,
            custom: None,
            materialized_to: match (self.materialized_to, other.materialized_to) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            },
        })
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.eval(y);
        }
        if let Some(c) = &self.custom {
            s += (c.f)(y);
        }
        s
    }

    /// True when every term is an indicator (the `Σ c_j 1_{(a_j,b_j)}` kind).
    pub fn is_step(&self) -> bool {
        self.custom.is_none() && self.terms.iter().all(Term::is_step)
    }

    /// Step part and closed-form part evaluated separately.
    pub(crate) fn eval_split(&self, y: f64) -> (f64, f64) {
        let mut step = 0.0;
        let mut smooth = 0.0;
        for t in &self.terms {
            let v = t.eval(y);
            if t.is_step() {
                step += v;
            } else {
                smooth += v;
            }
        }
        if let Some(c) = &self.custom {
            smooth += (c.f)(y);
        }
        (step, smooth)
    }

    fn primitive_terms(&self, y: f64) -> f64 {
        let mut s = 0.0;
        for t in &self.terms {
            s += t.primitive(y);
        }
        s
    }

    /// `∫_a^b f(y) dy` (signed; negative when `b < a`).
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let mut v = self.primitive_terms(b) - self.primitive_terms(a);
        if let Some(c) = &self.custom {
            let f = c.f.clone();
            v += quadrature::integrate(move |y| f(y), a, b, 1e-13, 1e-11).value;
        }
        v
    }

    /// `∫_0^dt f(v + slope * s) ds`.
    #[inline]
    pub fn integral_along_linear(&self, v: f64, slope: f64, dt: f64) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        if slope == 0.0 || (slope * dt).abs() < 1e-300 {
            return self.eval(v) * dt;
        }
        (self.integral(v, v + slope * dt) / slope).max(0.0)
    }

    /// Closure of the support `(inf, sup)`; `None` for the zero function.
    pub fn support(&self) -> Option<(f64, f64)> {
        if self.custom.is_some() {
            return Some((f64::NEG_INFINITY, f64::INFINITY));
        }
        self.terms.iter().filter_map(Term::support).fold(None, |acc, (a, b)| match acc {
            None => Some((a, b)),
            Some((x, y)) => Some((x.min(a), y.max(b))),
        })
    }

    /// `f == 0` on `[level, ∞)`.
    pub fn vanishes_above(&self, level: f64) -> bool {
        match self.support() {
            None => true,
            Some((_, hi)) => hi <= level,
        }
    }

    /// Upper bound of `f` on `[a, b]`.
    pub fn local_bound(&self, a: f64, b: f64) -> f64 {
        let mut s: f64 = self.terms.iter().map(|t| t.sup_on(a, b)).sum();
        if let Some(c) = &self.custom {
            s += (c.bound)(a, b);
        }
        s
    }

    /// Kinks and discontinuities, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for t in &self.terms {
            t.breakpoints(&mut out);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Checks `f(y) >= f(y')` for `l <= y <= y' <= upper` on a grid refined
    /// by the breakpoints. Jumps at breakpoints are checked from both sides.
    pub fn check_nonincreasing(&self, l: f64, upper: f64, n: usize) -> Result<()> {
        let mut pts: Vec<f64> = (0..=n).map(|i| l + (upper - l) * i as f64 / n as f64).collect();
        for b in self.breakpoints() {
            if b > l && b < upper {
                let d = 1e-9 * b.abs().max(1.0);
                pts.extend([b - d, b, b + d]);
            }
        }
        pts.sort_by(f64::total_cmp);
        let mut prev = self.eval(pts[0]);
        for &y in &pts[1..] {
            let v = self.eval(y);
            if v > prev * (1.0 + 1e-12) + 1e-300 {
                return Err(invalid_arg(format!(
                    "{} is not nonincreasing on [{l}, {upper}]: increases near y = {y}",
                    self.id
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

impl TryFrom<&FunctionSpec> for TestFunction {
    type Error = Error;
    fn try_from(spec: &FunctionSpec) -> Result<Self> {
        TestFunction::from_spec(spec)
    }
}
