//! File formats: orbit JSON, branch and trace CSV, events and reduction reports.
//!
//! Floats are written in Rust's shortest round-trip form and parsed with
//! exact rounding, so every stored number reads back bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::action::{angular_momentum, Potential};
use crate::bifurcation::BifurcationEvent;
use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::loop_space::{Axis, LoopPath, Series, BODIES};
use crate::reduction::{BranchPrediction, IdentityCheck, LSReduction};
use crate::symmetry::{BifurcationPattern, IrrepLabel};
use crate::trace::TracedBranch;

pub const ORBIT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
}

impl PotentialRecord {
    pub fn new(pot: &Potential) -> Result<Self> {
        match *pot {
            Potential::Homogeneous { a } => Ok(Self {
                kind: "homogeneous".into(),
                a: Some(a),
            }),
            Potential::LennardJones => Ok(Self {
                kind: "lennard_jones".into(),
                a: None,
            }),
            Potential::Free => Err(Error::Unsupported("the free potential has no orbit-file encoding".into())),
        }
    }

    pub fn potential(&self) -> Result<Potential> {
        match (self.kind.as_str(), self.a) {
            ("homogeneous", Some(a)) => Potential::homogeneous(a),
            ("homogeneous", None) => Err(Error::Format("homogeneous potential without exponent".into())),
            ("lennard_jones", _) => Ok(Potential::LennardJones),
            (other, _) => Err(Error::Format(format!("unknown potential kind {other:?}"))),
        }
    }
}

/// Raw amplitudes of one coordinate: `cos[m]` for `m = 0..=N`, `sin[m-1]` for `m = 1..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCoeffs {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyCoeffs {
    pub x: AxisCoeffs,
    pub y: AxisCoeffs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub body0: BodyCoeffs,
    pub body1: BodyCoeffs,
    pub body2: BodyCoeffs,
}

impl Coefficients {
    fn body(&self, i: usize) -> &BodyCoeffs {
        match i {
            0 => &self.body0,
            1 => &self.body1,
            _ => &self.body2,
        }
    }
}

/// Contents of an orbit file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFile {
    pub format_version: u32,
    pub period: f64,
    pub n_modes: usize,
    pub potential: PotentialRecord,
    pub coeffs: Coefficients,
}

impl OrbitFile {
    pub fn new(path: &LoopPath, pot: &Potential) -> Result<Self> {
        let n = path.n_modes();
        let axis = |body, axis| AxisCoeffs {
            cos: (0..=n).map(|m| path.cos_coeff(body, axis, m)).collect(),
            sin: (1..=n).map(|m| path.sin_coeff(body, axis, m)).collect(),
        };
        let body = |b| BodyCoeffs {
            x: axis(b, Axis::X),
            y: axis(b, Axis::Y),
        };
        Ok(Self {
            format_version: ORBIT_FORMAT_VERSION,
            period: path.period(),
            n_modes: n,
            potential: PotentialRecord::new(pot)?,
            coeffs: Coefficients {
                body0: body(0),
                body1: body(1),
                body2: body(2),
            },
        })
    }

    pub fn path(&self) -> Result<LoopPath> {
        if self.format_version != ORBIT_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format_version {}", self.format_version)));
        }
        let n = self.n_modes;
        let mut q = LoopPath::zeros(self.period, n);
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::Format(format!("period must be positive, got {}", self.period)));
        }
        for b in 0..BODIES {
            let body = self.coeffs.body(b);
            for (axis, c) in [(Axis::X, &body.x), (Axis::Y, &body.y)] {
                if c.cos.len() != n + 1 || c.sin.len() != n {
                    return Err(Error::Format(format!(
                        "body{b} expects {} cosine and {n} sine coefficients, got {} and {}",
                        n + 1,
                        c.cos.len(),
                        c.sin.len()
                    )));
                }
                for (m, v) in c.cos.iter().enumerate() {
                    q.set_cos(b, axis, m, *v);
                }
                for (m, v) in c.sin.iter().enumerate() {
                    q.set_sin(b, axis, m + 1, *v);
                }
            }
        }
        Ok(q)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn write_orbit(file: &Path, path: &LoopPath, pot: &Potential) -> Result<()> {
    fs::write(file, OrbitFile::new(path, pot)?.to_json()?)?;
    Ok(())
}

pub fn read_orbit(file: &Path) -> Result<(LoopPath, Potential)> {
    let orbit = OrbitFile::from_json(&fs::read_to_string(file)?)?;
    Ok((orbit.path()?, orbit.potential.potential()?))
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Branch CSV with one row per point. `orbit_files[i]` names the orbit file of
/// point `i`, if one was written.
pub fn write_branch_csv<W: Write>(branch: &Branch, out: W, orbit_files: &[Option<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["param".to_string(), "action".into(), "morse_index".into()];
    header.extend(IrrepLabel::D6_LABELS.iter().map(|l| format!("kappa_{}", l.name())));
    header.extend(["fold_flag".to_string(), "orbit_file".into()]);
    w.write_record(&header)?;
    for (i, p) in branch.points.iter().enumerate() {
        let mut row = vec![num(p.param), num(p.action), p.morse_index.map(|m| m.to_string()).unwrap_or_default()];
        row.extend(IrrepLabel::D6_LABELS.iter().map(|&l| p.kappa(l).map(num).unwrap_or_default()));
        row.push(if p.fold { "1" } else { "0" }.into());
        row.push(orbit_files.get(i).cloned().flatten().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of an events file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub xi0: f64,
    pub irrep: String,
    pub d: usize,
    pub order: u8,
    #[serde(rename = "type")]
    pub kind: String,
    pub kappa_slope: f64,
    pub projector: String,
    /// Orbit file of the crossing loop, relative to the events file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<String>,
}

impl EventRecord {
    pub fn new(event: &BifurcationEvent) -> Self {
        let first = event.patterns[0];
        Self {
            xi0: event.xi0,
            irrep: event.label.name().into(),
            d: event.d(),
            order: first.order,
            kind: first.kind.name().into(),
            kappa_slope: event.kappa_slope,
            projector: projector_names(&event.patterns),
            orbit: None,
        }
    }

    pub fn label(&self) -> Result<IrrepLabel> {
        IrrepLabel::parse(&self.irrep).ok_or_else(|| Error::Format(format!("unknown representation {:?}", self.irrep)))
    }
}

fn projector_names(patterns: &[BifurcationPattern]) -> String {
    patterns.iter().map(|p| p.projector.name()).collect::<Vec<_>>().join(" or ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsFile {
    pub param_name: String,
    pub events: Vec<EventRecord>,
}

impl EventsFile {
    pub fn new(param_name: &str, events: &[BifurcationEvent]) -> Self {
        Self {
            param_name: param_name.into(),
            events: events.iter().map(EventRecord::new).collect(),
        }
    }

    pub fn write(&self, file: &Path) -> Result<()> {
        fs::write(file, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(file: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(file)?)?)
    }
}

fn potential_json(pot: &Potential) -> Value {
    json!({ "kind": pot.kind(), "a": pot.exponent() })
}

/// Finite floats as numbers, the rest as `null`.
fn f(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn prediction_json(p: &BranchPrediction) -> Value {
    json!({
        "projector": p.pattern.projector.name(),
        "group": p.pattern.residual_group.name(),
        "order": p.order,
        "type": p.pattern.kind.name(),
        "angles": p.angles,
        "leading": f(p.leading),
        "radius_coefficient": f(p.radius_coefficient),
        "action_coefficient": f(p.action_coefficient),
        "curvature_coefficient": f(p.curvature_coefficient),
        "angular_coefficient": p.angular_coefficient.map(f),
        "kappa_side": p.kappa_side.name(),
        "side": p.side.name(),
        "kappa_slope": f(p.kappa_slope),
        "action_split": p.action_split.map(f),
    })
}

/// Reduction report: coefficients, identity residuals, predictions and, when
/// branches were traced, their fitted scaling exponents.
pub fn reduction_report(
    red: &LSReduction,
    checks: &[IdentityCheck],
    predictions: &[BranchPrediction],
    traces: &[TracedBranch],
) -> Value {
    let sixth = red.sixth.as_ref().map(|s| {
        json!({
            "plus": f(s.plus),
            "minus": f(s.minus),
            "samples": s.samples.iter().map(|v| f(*v)).collect::<Vec<_>>(),
            "residual": f(s.residual),
            "a4_fit": s.a4_fit.iter().map(|v| f(*v)).collect::<Vec<_>>(),
        })
    });
    json!({
        "irrep": red.label.name(),
        "d": red.d(),
        "xi0": red.xi0,
        "kappa": f(red.kappa),
        "kappa_slope": f(red.kappa_slope),
        "potential": potential_json(&red.potential),
        "n_modes": red.reference.n_modes(),
        "coefficients": {
            "theta": red.thetas,
            "a3": red.a3.iter().map(|v| f(*v)).collect::<Vec<_>>(),
            "a4": red.a4.iter().map(|v| f(*v)).collect::<Vec<_>>(),
            "a5": red.a5.iter().map(|v| f(*v)).collect::<Vec<_>>(),
            "a3_scale": f(red.a3_scale),
            "a5_scale": f(red.a5_scale),
            "a6": sixth,
        },
        "retained_modes": red.retained,
        "smallest_retained": f(red.smallest_retained),
        "a4_cutoff": red.cutoff_table.iter().map(|(k, v)| json!([k, f(*v)])).collect::<Vec<_>>(),
        "identities": checks.iter().map(|c| json!({
            "name": c.name,
            "residual": f(c.residual),
            "tolerance": c.tolerance,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
        "predictions": predictions.iter().map(prediction_json).collect::<Vec<_>>(),
        "fit_exponents": traces.iter().map(|t| json!({
            "projector": t.pattern.projector.name(),
            "exponent": f(t.exponent),
            "sides": t.sides.name(),
            "points": t.points.len(),
        })).collect::<Vec<_>>(),
    })
}

/// Traced-branch CSV. `orbit_files[i]` names the orbit file of point `i`.
pub fn write_trace_csv<W: Write>(trace: &TracedBranch, out: W, orbit_files: &[Option<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "param",
        "radius",
        "action",
        "distance",
        "angular_momentum",
        "invariance_residual",
        "breaking",
        "orbit_file",
    ])?;
    for (i, p) in trace.points.iter().enumerate() {
        w.write_record([
            num(p.param),
            num(p.radius),
            num(p.action),
            num(p.distance),
            num(p.angular_momentum),
            num(p.invariance),
            num(p.breaking),
            orbit_files.get(i).cloned().flatten().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Positions at `samples` equispaced times over one period, with the
/// (constant) angular momentum in the last column.
pub fn write_plot_csv<W: Write>(path: &LoopPath, samples: usize, out: W) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidConfig("plot needs at least one sample".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x0", "y0", "x1", "y1", "x2", "y2", "angular_momentum"])?;
    let l = angular_momentum(path);
    for j in 0..samples {
        let t = j as f64 * path.period() / samples as f64;
        let pos = path.evaluate(t);
        let mut row = vec![num(t)];
        for p in pos {
            row.push(num(p[0]));
            row.push(num(p[1]));
        }
        row.push(num(l));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
