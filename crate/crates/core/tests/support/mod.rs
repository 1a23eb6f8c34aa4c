//! Test-only oracles shared by the integration tests.

#![allow(dead_code)]

use eclose::{FunctionalOrder, Sample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All `r`-subsets of `0..m`, in lexicographic order.
pub fn subsets(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            go(i + 1, m, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, r, &mut Vec::new(), &mut out);
    out
}

fn close(a: &[f64], b: &[f64], eps: f64) -> bool {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
        < eps
}

/// `Q_{k,n}` by enumerating every subset pair `(S, T)` and evaluating the
/// symmetrized kernel, as `(Σ_{S,T} Σ_{i∈S} ψ^(i), k1 · C(n1,k1) · C(n2,k2))`
/// (or the within-Y analogue when `k1 = 0`). `None` when a sample is too
/// small for the order.
pub fn brute_force_q(x: &Sample, y: &Sample, k: FunctionalOrder, eps: f64) -> Option<(u128, u128)> {
    let (k1, k2) = (k.k1() as usize, k.k2() as usize);
    if x.len() < k1 || y.len() < k2 {
        return None;
    }
    let xs = subsets(x.len(), k1);
    let ys = subsets(y.len(), k2);
    let mut hits: u128 = 0;
    if k1 >= 1 {
        for s in &xs {
            for t in &ys {
                for &i in s {
                    let xi = x.point(i);
                    let ok = s.iter().all(|&j| close(xi, x.point(j), eps))
                        && t.iter().all(|&l| close(xi, y.point(l), eps));
                    hits += u128::from(ok);
                }
            }
        }
        Some((hits, (k1 * xs.len() * ys.len()) as u128))
    } else {
        for t in &ys {
            for &i in t {
                let yi = y.point(i);
                hits += u128::from(t.iter().all(|&j| close(yi, y.point(j), eps)));
            }
        }
        Some((hits, (k2 * ys.len()) as u128))
    }
}

/// A small random instance: lattice points with ties and boundary distances
/// on even seeds, continuous points otherwise.
pub fn random_instance(seed: u64, max_n: usize) -> (Sample, Sample, f64) {
    let mut r = rng(seed);
    let d = r.random_range(1..=3usize);
    let n1 = r.random_range(0..=max_n);
    let n2 = r.random_range(0..=max_n);
    let lattice = seed.is_multiple_of(2);
    let coord = |r: &mut ChaCha8Rng| {
        if lattice {
            r.random_range(0..6) as f64 / 8.0
        } else {
            r.random::<f64>()
        }
    };
    let x: Vec<f64> = (0..n1 * d).map(|_| coord(&mut r)).collect();
    let y: Vec<f64> = (0..n2 * d).map(|_| coord(&mut r)).collect();
    let eps = if lattice {
        r.random_range(1..=5) as f64 / 8.0
    } else {
        r.random_range(0.05..0.9)
    };
    (
        Sample::new(d, x).expect("valid sample"),
        Sample::new(d, y).expect("valid sample"),
        eps,
    )
}
