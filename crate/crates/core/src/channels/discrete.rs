use crate::error::{Error, Result};
use crate::infotheory::discrete::{entropy_unchecked, unflatten, MASS_TOL};
use crate::infotheory::{channel_mutual_information, Kernel, Pmf};

use super::{IssueKind, ValidationReport};

/// Discrete memoryless many-to-one channel.
///
/// `interference` is `p(V | X_1..X_{K-1})` over the row-major product of the
/// interferers' alphabets (user 1 most significant); `f1[x0][v]` is the output
/// of the first receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMto {
    inputs: Vec<usize>,
    y1_size: usize,
    direct: Vec<Kernel>,
    interference: Kernel,
    f1: Vec<Vec<usize>>,
}

impl DiscreteMto {
    /// Checks shapes only; use [`DiscreteMto::validate`] for stochasticity and invertibility.
    pub fn new(
        inputs: Vec<usize>,
        y1_size: usize,
        direct: Vec<Kernel>,
        interference: Kernel,
        f1: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let k = inputs.len();
        if k < 2 {
            return Err(Error::Dimension(format!("need at least two users, got {k}")));
        }
        if let Some(i) = inputs.iter().position(|&n| n == 0) {
            return Err(Error::Dimension(format!("user {} has an empty input alphabet", i + 1)));
        }
        if direct.len() != k - 1 {
            return Err(Error::Dimension(format!("{} direct kernels for {} interferers", direct.len(), k - 1)));
        }
        for (j, kernel) in direct.iter().enumerate() {
            if kernel.rows() != inputs[j + 1] {
                return Err(Error::Dimension(format!(
                    "direct kernel of user {} has {} rows, input alphabet has {}",
                    j + 2,
                    kernel.rows(),
                    inputs[j + 1]
                )));
            }
        }
        let rows: usize = inputs[1..].iter().product();
        if interference.rows() != rows {
            return Err(Error::Dimension(format!(
                "interference kernel has {} rows, the interferers' product alphabet has {rows}",
                interference.rows()
            )));
        }
        if f1.len() != inputs[0] {
            return Err(Error::Dimension(format!("f1 has {} rows for {} inputs of user 1", f1.len(), inputs[0])));
        }
        let v = interference.cols();
        for (x, row) in f1.iter().enumerate() {
            if row.len() != v {
                return Err(Error::Dimension(format!("f1 row {x} has {} entries for {v} interference symbols", row.len())));
            }
            if let Some(&y) = row.iter().find(|&&y| y >= y1_size) {
                return Err(Error::Dimension(format!("f1 row {x} maps to output {y}, alphabet has {y1_size}")));
            }
        }
        Ok(Self {
            inputs,
            y1_size,
            direct,
            interference,
            f1,
        })
    }

    pub fn num_users(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn interferer_sizes(&self) -> &[usize] {
        &self.inputs[1..]
    }

    pub fn output_size(&self, user: usize) -> usize {
        if user == 0 {
            self.y1_size
        } else {
            self.direct[user - 1].cols()
        }
    }

    pub fn y1_size(&self) -> usize {
        self.y1_size
    }

    pub fn v_size(&self) -> usize {
        self.interference.cols()
    }

    /// `p(Y_i | X_i)` for interferer `user ≥ 1`.
    pub fn direct(&self, user: usize) -> &Kernel {
        &self.direct[user - 1]
    }

    pub fn direct_kernels(&self) -> &[Kernel] {
        &self.direct
    }

    pub fn interference(&self) -> &Kernel {
        &self.interference
    }

    pub fn f1(&self) -> &[Vec<usize>] {
        &self.f1
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (j, kernel) in self.direct.iter().enumerate() {
            if let Some((row, sum)) = kernel.check_stochastic(MASS_TOL) {
                report.push(
                    IssueKind::NonStochastic,
                    format!("direct kernel of user {} row {row} sums to {sum}", j + 2),
                );
            }
        }
        if let Some((row, sum)) = self.interference.check_stochastic(MASS_TOL) {
            report.push(IssueKind::NonStochastic, format!("interference kernel row {row} sums to {sum}"));
        }
        for (x, row) in self.f1.iter().enumerate() {
            for v in 0..row.len() {
                if let Some(w) = (0..v).find(|&w| row[w] == row[v]) {
                    report.push(
                        IssueKind::NotInvertible,
                        format!("f1(x1={x}, v={w}) and f1(x1={x}, v={v}) both equal {}", row[v]),
                    );
                }
            }
        }
        report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        self.validate().into_result()
    }

    /// True when every direct and interference kernel is a function.
    pub fn is_deterministic(&self) -> bool {
        self.interference.as_function().is_some() && self.direct.iter().all(|k| k.as_function().is_some())
    }

    pub(crate) fn check_dist(&self, dist: &[Pmf]) -> Result<()> {
        if dist.len() != self.num_users() {
            return Err(Error::Dimension(format!("{} input laws for {} users", dist.len(), self.num_users())));
        }
        for (i, (p, &n)) in dist.iter().zip(&self.inputs).enumerate() {
            if p.len() != n {
                return Err(Error::Dimension(format!(
                    "input law of user {} has {} entries, alphabet has {n}",
                    i + 1,
                    p.len()
                )));
            }
        }
        Ok(())
    }

    /// Product law of the interferers' inputs, row-major.
    pub fn interferer_joint(&self, dist: &[Pmf]) -> Vec<f64> {
        let mut joint = vec![1.0];
        for p in &dist[1..] {
            joint = joint.iter().flat_map(|a| p.probs().iter().map(move |b| a * b)).collect();
        }
        joint
    }

    pub fn interference_law(&self, dist: &[Pmf]) -> Result<Pmf> {
        self.check_dist(dist)?;
        Pmf::normalized(&self.interference.push(&self.interferer_joint(dist)))
    }

    /// Law of `Y_1 = f1(X_1, V)` with `X_1` independent of `V`.
    pub fn y1_law(&self, p1: &[f64], pv: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.y1_size];
        for (x, row) in self.f1.iter().enumerate() {
            for (v, &y) in row.iter().enumerate() {
                out[y] += p1[x] * pv[v];
            }
        }
        out
    }

    /// `I(X_i; Y_i)` for every user, interference treated as noise at user 0.
    pub fn tin_rates(&self, dist: &[Pmf]) -> Result<Vec<f64>> {
        self.check_dist(dist)?;
        let pv = self.interference.push(&self.interferer_joint(dist));
        Ok(self.tin_rates_raw(&dist.iter().map(|p| p.probs()).collect::<Vec<_>>(), &pv))
    }

    pub(crate) fn tin_rates_raw(&self, dist: &[&[f64]], pv: &[f64]) -> Vec<f64> {
        // H(Y_1 | X_1) = H(V) by invertibility of f1.
        let r1 = (entropy_unchecked(&self.y1_law(dist[0], pv)) - entropy_unchecked(pv)).max(0.0);
        std::iter::once(r1)
            .chain(self.direct.iter().zip(&dist[1..]).map(|(k, p)| channel_mutual_information(p, k)))
            .collect()
    }

    pub fn tin_sum_rate(&self, dist: &[Pmf]) -> Result<f64> {
        Ok(self.tin_rates(dist)?.iter().sum())
    }
}

/// `p(V | X_1..X_{K-1})` of a collision channel; `V = 0` is no collision,
/// `V = 1` is a collision. Input symbol 0 of every user is the silent symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum CollisionKernel {
    /// Collision exactly when some interferer is not silent.
    Deterministic,
    /// Collision with a fixed probability regardless of the inputs.
    Constant(f64),
    Table(Kernel),
}

/// Collision channel: `Y_i = X_i` for interferers, and receiver 1 sees `X_1`
/// unless a collision occurs, in which case it sees the extra output `ε`
/// (index `|X_1|`).
pub fn make_collision(inputs: Vec<usize>, kernel: CollisionKernel) -> Result<DiscreteMto> {
    let k = inputs.len();
    if k < 2 {
        return Err(Error::Dimension(format!("need at least two users, got {k}")));
    }
    let rows: usize = inputs[1..].iter().product();
    let interference = match kernel {
        CollisionKernel::Deterministic => {
            let sizes = &inputs[1..];
            let mut idx = vec![0; sizes.len()];
            let map: Vec<usize> = (0..rows)
                .map(|r| {
                    unflatten(r, sizes, &mut idx);
                    usize::from(idx.iter().any(|&x| x != 0))
                })
                .collect();
            Kernel::deterministic(&map, 2)
        }
        CollisionKernel::Constant(q) => {
            if !(0.0..=1.0).contains(&q) {
                return Err(Error::InvalidChannel(format!("collision probability {q} outside [0, 1]")));
            }
            Kernel::from_flat(rows, 2, (0..rows).flat_map(|_| [1.0 - q, q]).collect())?
        }
        CollisionKernel::Table(t) => {
            if t.cols() != 2 {
                return Err(Error::InvalidChannel(format!(
                    "collision kernel must be over {{0, ε}}, got {} outputs",
                    t.cols()
                )));
            }
            t
        }
    };
    let n1 = inputs[0];
    let f1 = (0..n1).map(|x| vec![x, n1]).collect();
    let direct = inputs[1..].iter().map(|&n| Kernel::identity(n)).collect();
    DiscreteMto::new(inputs, n1 + 1, direct, interference, f1)
}

/// Deterministic per-user maps `U_i = g_i(X_i)` for the interferers, with an
/// optional composition `V = f_V(U_1..U_{K-1})` over the row-major `U` product.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxSpec {
    maps: Vec<Vec<usize>>,
    sizes: Vec<usize>,
    compose: Option<Vec<usize>>,
}

impl AuxSpec {
    pub fn new(maps: Vec<Vec<usize>>, sizes: Vec<usize>, compose: Option<Vec<usize>>) -> Result<Self> {
        if maps.len() != sizes.len() {
            return Err(Error::InvalidAux(format!("{} maps for {} alphabet sizes", maps.len(), sizes.len())));
        }
        for (j, (m, &s)) in maps.iter().zip(&sizes).enumerate() {
            if let Some(&u) = m.iter().find(|&&u| u >= s) {
                return Err(Error::InvalidAux(format!("map of user {} hits {u}, alphabet has {s}", j + 2)));
            }
        }
        if let Some(c) = &compose {
            let n: usize = sizes.iter().product();
            if c.len() != n {
                return Err(Error::InvalidAux(format!("composition has {} entries, U product has {n}", c.len())));
            }
        }
        Ok(Self { maps, sizes, compose })
    }

    /// `U_i = X_i`.
    pub fn trivial(ch: &DiscreteMto) -> Self {
        let sizes = ch.interferer_sizes().to_vec();
        Self {
            maps: sizes.iter().map(|&n| (0..n).collect()).collect(),
            sizes,
            compose: None,
        }
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn compose(&self) -> Option<&[usize]> {
        self.compose.as_deref()
    }

    /// Errors unless `p(V | X)` factors through the maps exactly.
    pub fn check(&self, ch: &DiscreteMto) -> Result<()> {
        let xs = ch.interferer_sizes();
        if self.maps.len() != xs.len() {
            return Err(Error::InvalidAux(format!("{} maps for {} interferers", self.maps.len(), xs.len())));
        }
        for (j, (m, &n)) in self.maps.iter().zip(xs).enumerate() {
            if m.len() != n {
                return Err(Error::InvalidAux(format!(
                    "map of user {} covers {} inputs, alphabet has {n}",
                    j + 2,
                    m.len()
                )));
            }
        }
        let rows = ch.interference().rows();
        let mut first_row_for_u: Vec<Option<usize>> = vec![None; self.sizes.iter().product()];
        for r in 0..rows {
            let u = self.u_index(xs, r);
            let row = ch.interference().row(r);
            if let Some(c) = &self.compose {
                let v = c[u];
                if v >= row.len() || (row[v] - 1.0).abs() > MASS_TOL {
                    return Err(Error::InvalidAux(format!(
                        "interferer input {r} does not give V = {v} as the composition claims"
                    )));
                }
            }
            match first_row_for_u[u] {
                None => first_row_for_u[u] = Some(r),
                Some(r0) => {
                    let same = ch
                        .interference()
                        .row(r0)
                        .iter()
                        .zip(row)
                        .all(|(a, b)| (a - b).abs() <= MASS_TOL);
                    if !same {
                        return Err(Error::InvalidAux(format!(
                            "interferer inputs {r0} and {r} share U but differ in p(V|X)"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Row-major index into the `U` product for a row-major interferer input index.
    pub fn u_index(&self, x_sizes: &[usize], x_row: usize) -> usize {
        let mut idx = vec![0; x_sizes.len()];
        unflatten(x_row, x_sizes, &mut idx);
        idx.iter()
            .zip(&self.maps)
            .zip(&self.sizes)
            .fold(0, |acc, ((&x, m), &s)| acc * s + m[x])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::catalog;
    use crate::infotheory::binary_entropy;

    #[test]
    fn xor_is_valid() {
        assert!(catalog::xor().validate().is_valid());
    }

    #[test]
    fn repeated_f1_output_names_the_pair() {
        let ch = DiscreteMto::new(
            vec![2, 2],
            2,
            vec![Kernel::identity(2)],
            Kernel::identity(2),
            vec![vec![0, 0], vec![0, 1]],
        )
        .unwrap();
        let report = ch.validate();
        assert_eq!(report.issues.len(), 1);
        assert_eq!(report.issues[0].kind, IssueKind::NotInvertible);
        assert!(report.issues[0].message.contains("x1=0, v=0") && report.issues[0].message.contains("v=1"));
    }

    #[test]
    fn short_kernel_row_is_reported() {
        let bad = Kernel::new(vec![vec![0.9, 0.0], vec![0.0, 1.0]]).unwrap();
        let ch = DiscreteMto::new(vec![2, 2], 4, vec![bad], Kernel::identity(2), vec![vec![0, 1], vec![2, 3]]).unwrap();
        let report = ch.validate();
        assert_eq!(report.issues[0].kind, IssueKind::NonStochastic);
        assert!(report.issues[0].message.contains("row 0"));
        assert!(matches!(ch.ensure_valid(), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            DiscreteMto::new(vec![2], 2, vec![], Kernel::identity(1), vec![vec![0], vec![1]]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            DiscreteMto::new(vec![2, 2], 2, vec![Kernel::identity(2)], Kernel::identity(2), vec![vec![0, 2], vec![1, 0]]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn collision_deterministic_is_classical() {
        let ch = make_collision(vec![3, 2, 2], CollisionKernel::Deterministic).unwrap();
        assert!(ch.validate().is_valid());
        assert_eq!(ch.interference().as_function().unwrap(), vec![0, 1, 1, 1]);
        assert_eq!(ch.y1_size(), 4);
    }

    #[test]
    fn collision_never_is_interference_free() {
        let ch = make_collision(vec![3, 2], CollisionKernel::Constant(0.0)).unwrap();
        let d = vec![Pmf::uniform(3), Pmf::uniform(2)];
        let r = ch.tin_rates(&d).unwrap();
        assert!((r[0] - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn collision_constant_is_erasure() {
        let q = 0.3;
        let ch = make_collision(vec![2, 2], CollisionKernel::Constant(q)).unwrap();
        let d = vec![Pmf::uniform(2), Pmf::uniform(2)];
        let r = ch.tin_rates(&d).unwrap();
        // erasure channel with uniform input: 1 − q
        assert!((r[0] - (1.0 - q)).abs() < 1e-12);
        let pv = ch.interference_law(&d).unwrap();
        assert!((pv.entropy() - binary_entropy(q)).abs() < 1e-12);
    }

    #[test]
    fn collision_rejects_wide_table() {
        let t = Kernel::new(vec![vec![0.5, 0.25, 0.25], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            make_collision(vec![2, 2], CollisionKernel::Table(t)),
            Err(Error::InvalidChannel(_))
        ));
    }

    #[test]
    fn interference_law_examples() {
        let ch = catalog::xor();
        let uniform = vec![Pmf::uniform(2); 3];
        assert!(Pmf::uniform(2).max_abs_diff(&ch.interference_law(&uniform).unwrap()) < 1e-15);
        let silent = vec![Pmf::uniform(2), Pmf::point_mass(2, 1), Pmf::point_mass(2, 1)];
        let pv = ch.interference_law(&silent).unwrap();
        assert_eq!(pv.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn aux_checks() {
        let xor = catalog::xor();
        assert!(AuxSpec::trivial(&xor).check(&xor).is_ok());
        let constant = AuxSpec::new(vec![vec![0, 0], vec![0, 0]], vec![1, 1], None).unwrap();
        assert!(matches!(constant.check(&xor), Err(Error::InvalidAux(_))));
        let xor_compose = AuxSpec::new(vec![vec![0, 1], vec![0, 1]], vec![2, 2], Some(vec![0, 1, 1, 0])).unwrap();
        assert!(xor_compose.check(&xor).is_ok());
        let wrong = AuxSpec::new(vec![vec![0, 1], vec![0, 1]], vec![2, 2], Some(vec![0, 1, 0, 1])).unwrap();
        assert!(wrong.check(&xor).is_err());
    }
}
