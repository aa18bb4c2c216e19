use crate::error::{Error, Result};
use crate::infotheory::discrete::unflatten;
use crate::infotheory::Kernel;
use crate::linalg::CMatrix;

use super::{DiscreteMto, GaussianMto, ValidationReport};

#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    Discrete(DiscreteMto),
    Gaussian(GaussianMto),
}

impl Carrier {
    pub fn num_users(&self) -> usize {
        match self {
            Carrier::Discrete(c) => c.num_users(),
            Carrier::Gaussian(c) => c.num_users(),
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            Carrier::Discrete(c) => c.validate(),
            Carrier::Gaussian(c) => c.validate(),
        }
    }
}

/// `F` parallel carriers sharing the same users. With `shared_power` the
/// Gaussian carriers draw on one budget per user instead of their own powers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelMto {
    carriers: Vec<Carrier>,
    shared_power: Option<Vec<f64>>,
}

impl ParallelMto {
    pub fn new(carriers: Vec<Carrier>, shared_power: Option<Vec<f64>>) -> Result<Self> {
        let Some(first) = carriers.first() else {
            return Err(Error::Dimension("parallel channel needs at least one carrier".into()));
        };
        let k = first.num_users();
        if let Some(f) = carriers.iter().position(|c| c.num_users() != k) {
            return Err(Error::Dimension(format!(
                "carrier {f} has {} users, carrier 0 has {k}",
                carriers[f].num_users()
            )));
        }
        if let Some(p) = &shared_power {
            if p.len() != k {
                return Err(Error::Dimension(format!("{} shared powers for {k} users", p.len())));
            }
            if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidGain("shared power budgets must be nonnegative".into()));
            }
        }
        Ok(Self { carriers, shared_power })
    }

    pub fn carriers(&self) -> &[Carrier] {
        &self.carriers
    }

    pub fn shared_power(&self) -> Option<&[f64]> {
        self.shared_power.as_deref()
    }

    pub fn num_users(&self) -> usize {
        self.carriers[0].num_users()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (f, c) in self.carriers.iter().enumerate() {
            report.extend_prefixed(&format!("carrier {f}"), c.validate());
        }
        report
    }
}

/// Single channel over vector alphabets equivalent to the parallel channel.
/// Discrete carriers are combined carrier-major (carrier 0 most significant);
/// Gaussian carriers become block-diagonal with the per-user power equal to
/// the shared budget, or the sum of carrier powers without one.
pub fn lift_parallel(p: &ParallelMto) -> Result<Carrier> {
    if p.carriers.len() == 1 {
        return Ok(p.carriers[0].clone());
    }
    if p.carriers.iter().all(|c| matches!(c, Carrier::Discrete(_))) {
        let parts: Vec<&DiscreteMto> = p
            .carriers
            .iter()
            .map(|c| match c {
                Carrier::Discrete(d) => d,
                Carrier::Gaussian(_) => unreachable!(),
            })
            .collect();
        return lift_discrete(&parts).map(Carrier::Discrete);
    }
    if p.carriers.iter().all(|c| matches!(c, Carrier::Gaussian(_))) {
        let parts: Vec<&GaussianMto> = p
            .carriers
            .iter()
            .map(|c| match c {
                Carrier::Gaussian(g) => g,
                Carrier::Discrete(_) => unreachable!(),
            })
            .collect();
        return lift_gaussian(&parts, p.shared_power.as_deref()).map(Carrier::Gaussian);
    }
    Err(Error::InvalidChannel("cannot lift a mix of discrete and Gaussian carriers".into()))
}

fn lift_discrete(parts: &[&DiscreteMto]) -> Result<DiscreteMto> {
    let k = parts[0].num_users();
    let f = parts.len();
    let inputs: Vec<usize> = (0..k).map(|i| parts.iter().map(|c| c.inputs()[i]).product()).collect();
    let y1_size = parts.iter().map(|c| c.y1_size()).product();
    let v_sizes: Vec<usize> = parts.iter().map(|c| c.v_size()).collect();
    let direct = (1..k)
        .map(|i| {
            parts[1..]
                .iter()
                .fold(parts[0].direct(i).clone(), |acc, c| acc.kron(c.direct(i)))
        })
        .collect();

    let per_user_sizes: Vec<Vec<usize>> = (0..k).map(|i| parts.iter().map(|c| c.inputs()[i]).collect()).collect();
    let rows: usize = inputs[1..].iter().product();
    let cols: usize = v_sizes.iter().product();
    let mut data = Vec::with_capacity(rows * cols);
    let mut user_idx = vec![0; k - 1];
    let mut carrier_idx = vec![0; f];
    for r in 0..rows {
        unflatten(r, &inputs[1..], &mut user_idx);
        // carrier_rows[c] = row of carrier c's interference kernel
        let mut carrier_rows = vec![0usize; f];
        for (j, &u) in user_idx.iter().enumerate() {
            unflatten(u, &per_user_sizes[j + 1], &mut carrier_idx);
            for (c, &x) in carrier_idx.iter().enumerate() {
                carrier_rows[c] = carrier_rows[c] * parts[c].inputs()[j + 1] + x;
            }
        }
        let mut row = vec![1.0];
        for (c, part) in parts.iter().enumerate() {
            let next = part.interference().row(carrier_rows[c]);
            row = row.iter().flat_map(|a| next.iter().map(move |b| a * b)).collect();
        }
        data.extend(row);
    }
    let interference = Kernel::from_flat(rows, cols, data)?;

    let y1_sizes: Vec<usize> = parts.iter().map(|c| c.y1_size()).collect();
    let mut x1_idx = vec![0; f];
    let mut v_idx = vec![0; f];
    let f1 = (0..inputs[0])
        .map(|x| {
            unflatten(x, &per_user_sizes[0], &mut x1_idx);
            (0..cols)
                .map(|v| {
                    unflatten(v, &v_sizes, &mut v_idx);
                    (0..f).fold(0, |acc, c| acc * y1_sizes[c] + parts[c].f1()[x1_idx[c]][v_idx[c]])
                })
                .collect()
        })
        .collect();
    DiscreteMto::new(inputs, y1_size, direct, interference, f1)
}

fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        m.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    m
}

fn lift_gaussian(parts: &[&GaussianMto], shared: Option<&[f64]>) -> Result<GaussianMto> {
    if parts.iter().any(|g| g.constellations().is_some()) {
        return Err(Error::InvalidChannel("cannot lift carriers restricted to constellations".into()));
    }
    let k = parts[0].num_users();
    let direct = (0..k)
        .map(|i| block_diag(&parts.iter().map(|g| g.direct(i)).collect::<Vec<_>>()))
        .collect();
    let cross = (1..k)
        .map(|i| block_diag(&parts.iter().map(|g| g.cross(i)).collect::<Vec<_>>()))
        .collect();
    let powers = match shared {
        Some(p) => p.to_vec(),
        None => (0..k).map(|i| parts.iter().map(|g| g.powers()[i]).sum()).collect(),
    };
    GaussianMto::new(direct, cross, powers)
}
