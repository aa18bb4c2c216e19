//! Small reference channels used by tests, the acceptance suite and the CLI.

use rand::Rng;

use crate::infotheory::discrete::unflatten;
use crate::infotheory::Kernel;

use super::{CollisionKernel, DiscreteMto};

/// Receiver 1 output `Y_1 = (X_1, V)`.
fn pair_f1(n1: usize, v: usize) -> Vec<Vec<usize>> {
    (0..n1).map(|x| (0..v).map(|w| x * v + w).collect()).collect()
}

/// Deterministic channel from per-user direct maps and a map of the
/// row-major interferer input to `V`; receiver 1 sees `(X_1, V)`.
pub fn deterministic(inputs: Vec<usize>, direct: Vec<(Vec<usize>, usize)>, v_map: Vec<usize>, v_size: usize) -> DiscreteMto {
    let n1 = inputs[0];
    DiscreteMto::new(
        inputs,
        n1 * v_size,
        direct.iter().map(|(m, n)| Kernel::deterministic(m, *n)).collect(),
        Kernel::deterministic(&v_map, v_size),
        pair_f1(n1, v_size),
    )
    .expect("catalog channel shapes are consistent")
}

/// Binary users, `Y_i = X_i` for `i = 2, 3`, `V = X_2 ⊕ X_3`.
pub fn xor() -> DiscreteMto {
    deterministic(
        vec![2, 2, 2],
        vec![(vec![0, 1], 2), (vec![0, 1], 2)],
        vec![0, 1, 1, 0],
        2,
    )
}

/// Binary users, `Y_i = X_i`, `V = (X_2, ..., X_K)`: resolvable interference.
pub fn concat(k: usize) -> DiscreteMto {
    let v = 1 << (k - 1);
    deterministic(
        vec![2; k],
        vec![(vec![0, 1], 2); k - 1],
        (0..v).collect(),
        v,
    )
}

/// Binary users with a constant `V`: no interference at all.
pub fn interference_free(k: usize) -> DiscreteMto {
    deterministic(vec![2; k], vec![(vec![0, 1], 2); k - 1], vec![0; 1 << (k - 1)], 1)
}

/// Receiver 1 has no input of its own and sees `Y_1 = V = (X_2, ..., X_K)`.
pub fn receiver_sees_interference(k: usize) -> DiscreteMto {
    let v = 1 << (k - 1);
    DiscreteMto::new(
        {
            let mut inputs = vec![2; k];
            inputs[0] = 1;
            inputs
        },
        v,
        vec![Kernel::identity(2); k - 1],
        Kernel::identity(v),
        vec![(0..v).collect()],
    )
    .expect("catalog channel shapes are consistent")
}

/// Binary users, `Y_i = BSC(p_y)(X_i)` and `V = BSC(p_v)(X_2)`.
pub fn bsc_interference(k: usize, p_y: f64, p_v: f64) -> DiscreteMto {
    let rows = 1 << (k - 1);
    let mut idx = vec![0; k - 1];
    let sizes = vec![2; k - 1];
    let data = (0..rows)
        .flat_map(|r| {
            unflatten(r, &sizes, &mut idx);
            if idx[0] == 0 {
                [1.0 - p_v, p_v]
            } else {
                [p_v, 1.0 - p_v]
            }
        })
        .collect();
    DiscreteMto::new(
        vec![2; k],
        4,
        vec![Kernel::bsc(p_y); k - 1],
        Kernel::from_flat(rows, 2, data).expect("shape"),
        pair_f1(2, 2),
    )
    .expect("catalog channel shapes are consistent")
}

/// Collision channel with a silent symbol plus `n` data symbols per user.
pub fn collision(k: usize, n: usize, kernel: CollisionKernel) -> DiscreteMto {
    super::make_collision(vec![n + 1; k], kernel).expect("catalog channel shapes are consistent")
}

/// Random deterministic channel: alphabets of size 2 or 3, random direct maps
/// and a random `V` map of the interferers' inputs.
pub fn random_deterministic<R: Rng>(rng: &mut R, k: usize) -> DiscreteMto {
    let inputs: Vec<usize> = (0..k).map(|_| rng.random_range(2..=3)).collect();
    let direct = inputs[1..]
        .iter()
        .map(|&n| {
            let out = rng.random_range(1..=n);
            ((0..n).map(|_| rng.random_range(0..out)).collect(), out)
        })
        .collect();
    let rows: usize = inputs[1..].iter().product();
    let v_size = rng.random_range(1..=rows.min(4));
    let v_map = (0..rows).map(|_| rng.random_range(0..v_size)).collect();
    deterministic(inputs, direct, v_map, v_size)
}
