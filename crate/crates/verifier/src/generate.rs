//! Seeded instance generators. Every instance is checked against the shape
//! its family advertises before it is returned.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratiolab_core::classify::{self, Shape};
use ratiolab_core::profile::Product;
use ratiolab_core::transform::Variant;
use ratiolab_core::{classify as classify_shape, ClassifyOptions, Coefficient, CoefficientSet, Density, FamilyKind, Profile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{FamilyName, FamilySpec};
use crate::error::{Result, VerifierError};

const MIN_GAP: f64 = 0.02;
const SHAPE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub family: FamilyName,
    pub seed: u64,
    pub index: usize,
    pub problem: CoefficientSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
}

impl Instance {
    pub fn rho(&self) -> &Density {
        &self.problem.rho
    }

    /// SHA-256 of the JSON form of the coefficients, hex encoded.
    pub fn spec_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.problem).expect("coefficients serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `count` instances of `spec`, identical for identical `(spec, seed)`.
pub fn generate_family(spec: &FamilySpec, seed: u64, count: usize) -> Result<Vec<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Separate streams keep families with a shared seed independent.
    rng.set_stream(FamilyName::ALL.iter().position(|f| *f == spec.name).unwrap_or(0) as u64);
    (0..count)
        .map(|index| {
            let problem = match spec.name {
                FamilyName::Theorem4Instances => theorem4(&mut rng, spec.variant.unwrap_or(Variant::SingleBarrierPotential))?,
                _ => CoefficientSet::string(string_density(&mut rng, spec)?),
            };
            let inst = Instance { family: spec.name, seed, index, problem, variant: spec.variant };
            check_shape(&inst)?;
            Ok(inst)
        })
        .collect()
}

fn string_density(rng: &mut ChaCha8Rng, spec: &FamilySpec) -> Result<Density> {
    let (lo, hi) = spec.values;
    let d = match spec.name {
        FamilyName::Constant => Density::constant(rng.gen_range(lo..hi))?,
        FamilyName::MonotoneStep => {
            let k = rng.gen_range(spec.pieces.0.max(2)..=spec.pieces.1.max(2));
            let mut v = values(rng, k, spec.values);
            v.sort_by(|a, b| b.total_cmp(a));
            Density::step(breaks(rng, k), v)?
        }
        FamilyName::SingleWellStep | FamilyName::SingleBarrierStep => {
            let k = rng.gen_range(spec.pieces.0.max(3)..=spec.pieces.1.max(3));
            let well = spec.name == FamilyName::SingleWellStep;
            Density::step(breaks(rng, k), unimodal(rng, k, spec.values, well))?
        }
        FamilyName::SingleWellSmooth => {
            let x0 = rng.gen_range(0.15..0.85);
            let c = rng.gen_range(lo..lo.max(2.0) + 1e-9);
            if rng.gen_bool(0.5) {
                let a = rng.gen_range(0.5..6.0);
                Density::family(FamilyKind::Quadratic, vec![c, a, x0])?
            } else {
                let (a1, a2) = (rng.gen_range(0.5..6.0), rng.gen_range(0.5..6.0));
                let (e1, e2) = (rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0));
                Density::family(FamilyKind::Power, vec![c, a1, a2, x0, e1, e2])?
            }
        }
        FamilyName::SymmetricSingleBarrier | FamilyName::SymmetricSingleWell => {
            symmetric(rng, spec.values, spec.name == FamilyName::SymmetricSingleWell)?
        }
        FamilyName::Theorem4Instances => unreachable!("handled by theorem4"),
    };
    Ok(d)
}

/// Sorted interior breakpoints for `k` pieces, no piece shorter than `MIN_GAP`.
fn breaks(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let mut b: Vec<f64> = (1..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        b.sort_by(f64::total_cmp);
        let mut edges = vec![0.0];
        edges.extend(&b);
        edges.push(1.0);
        if edges.windows(2).all(|w| w[1] - w[0] >= MIN_GAP) {
            return b;
        }
    }
}

fn values(rng: &mut ChaCha8Rng, k: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(lo..hi)).collect()
}

/// `k >= 3` values with the extremum strictly inside.
fn unimodal(rng: &mut ChaCha8Rng, k: usize, range: (f64, f64), well: bool) -> Vec<f64> {
    let mut v = values(rng, k, range);
    v.sort_by(|a, b| if well { a.total_cmp(b) } else { b.total_cmp(a) });
    let extreme = v[0];
    let mut rest = v.split_off(1);
    rest.shuffle(rng);
    let j = rng.gen_range(1..k - 1);
    let mut right = rest.split_off(j);
    let mut left = rest;
    if well {
        left.sort_by(|a, b| b.total_cmp(a));
        right.sort_by(f64::total_cmp);
    } else {
        left.sort_by(f64::total_cmp);
        right.sort_by(|a, b| b.total_cmp(a));
    }
    left.push(extreme);
    left.extend(right);
    left
}

/// Mirror-symmetric about `1/2`, monotone on each half.
fn symmetric(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), well: bool) -> Result<Density> {
    let sign = if well { -1.0 } else { 1.0 };
    Ok(match rng.gen_range(0..3) {
        0 => {
            let m = rng.gen_range(1..=3);
            let half = loop {
                let mut b: Vec<f64> = (0..m).map(|_| rng.gen_range(MIN_GAP..0.5 - MIN_GAP)).collect();
                b.sort_by(f64::total_cmp);
                if b.windows(2).all(|w| w[1] - w[0] >= MIN_GAP) {
                    break b;
                }
            };
            let mut v = values(rng, m + 1, (lo, hi));
            v.sort_by(|a, b| if well { b.total_cmp(a) } else { a.total_cmp(b) });
            let mut br = half.clone();
            br.extend(half.iter().rev().map(|b| 1.0 - b));
            let mut vals = v.clone();
            vals.extend(v[..m].iter().rev());
            Density::step(br, vals)?
        }
        1 => {
            let edge = rng.gen_range(lo..lo.max(4.0));
            let centre = if well { rng.gen_range(lo..edge) } else { rng.gen_range(edge..edge + 4.0) };
            let a = 4.0 * (edge - centre);
            Density::family(FamilyKind::Quadratic, vec![centre, a, 0.5])?
        }
        _ => {
            let a = rng.gen_range(0.2..3.0);
            let c = if well { a + rng.gen_range(lo..lo + 2.0) } else { rng.gen_range(lo..lo + 3.0) };
            Density::family(FamilyKind::Sine, vec![c, sign * a, 1.0, 0.0])?
        }
    })
}

fn theorem4(rng: &mut ChaCha8Rng, variant: Variant) -> Result<CoefficientSet> {
    let well = |rng: &mut ChaCha8Rng| -> Result<Density> {
        Ok(Density::family(FamilyKind::Quadratic, vec![rng.gen_range(0.5..2.0), rng.gen_range(0.0..3.0), 0.5])?)
    };
    let p = well(rng)?;
    let rho = well(rng)?;
    let q = match variant {
        Variant::SingleBarrierPotential => {
            let top = rng.gen_range(0.5..6.0);
            let xq = rng.gen_range(0.25..0.75);
            let (e1, e2) = (rng.gen_range(1.0..2.0), rng.gen_range(1.0..2.0));
            let a1 = top * rng.gen_range(0.2..1.0) / f64::powf(xq, e1);
            let a2 = top * rng.gen_range(0.2..1.0) / f64::powf(1.0 - xq, e2);
            Coefficient::family(FamilyKind::Power, vec![top, -a1, -a2, xq, e1, e2])?
        }
        Variant::NonnegativePotential => {
            if rng.gen_bool(0.5) {
                let a = rng.gen_range(0.2..3.0);
                let c = a * rng.gen_range(1.0..2.0);
                let k = rng.gen_range(2..=6) as f64;
                Coefficient::family(FamilyKind::Sine, vec![c, a, k, rng.gen_range(0.0..6.0)])?
            } else {
                let k = rng.gen_range(2..=6);
                Coefficient::step(breaks(rng, k), values(rng, k, (0.0, 4.0)))?
            }
        }
    };
    Ok(CoefficientSet { p, q, rho })
}

fn fail(inst: &Instance, expected: &str) -> VerifierError {
    VerifierError::Generation { family: inst.family.to_string(), index: inst.index, expected: expected.into() }
}

fn symmetric_about_half(rho: &Density) -> bool {
    (0..=64).all(|i| {
        let x = 0.5 * (i as f64 + 0.5) / 65.0;
        (rho.value(x) - rho.value(1.0 - x)).abs() <= 1e-12 * rho.value(x)
    })
}

fn check_shape(inst: &Instance) -> Result<()> {
    let opts = ClassifyOptions::with_tolerance(SHAPE_TOL);
    let shape = classify_shape(inst.rho().coefficient(), opts).shape;
    let ok = match inst.family {
        FamilyName::Constant => shape == Shape::Constant,
        FamilyName::MonotoneStep => shape == Shape::Decreasing,
        FamilyName::SingleWellStep | FamilyName::SingleWellSmooth => shape == Shape::SingleWell,
        FamilyName::SingleBarrierStep => shape == Shape::SingleBarrier,
        FamilyName::SymmetricSingleBarrier => shape == Shape::SingleBarrier && symmetric_about_half(inst.rho()),
        FamilyName::SymmetricSingleWell => shape == Shape::SingleWell && symmetric_about_half(inst.rho()),
        FamilyName::Theorem4Instances => {
            let p = &inst.problem;
            let q_ok = match inst.variant.unwrap_or(Variant::SingleBarrierPotential) {
                Variant::SingleBarrierPotential => classify_shape(&p.q, opts).shape.is_single_barrier(),
                Variant::NonnegativePotential => ratiolab_core::profile::bounds(&p.q, 4096).0 >= 0.0,
            };
            q_ok && classify::is_single_well_at(&Product(&p.p, &p.rho), 0.5, 1e-9, 4096)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(fail(inst, &format!("of its advertised kind (classified {shape:?})")))
    }
}
