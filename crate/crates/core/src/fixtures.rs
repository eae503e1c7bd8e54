//! Deterministic test geometries shared by tests and benchmarks.

use crate::spaces::{validate_metric, FiniteMetricSpace};

/// xorshift64*; deterministic, dependency-free.
pub struct SplitRng(u64);

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Random points in the unit square with the Euclidean metric.
pub fn random_euclidean_space(n: usize, seed: u64) -> FiniteMetricSpace {
    let mut rng = SplitRng::new(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.unit(), rng.unit())).collect();
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(x1, y1)| {
            pts.iter()
                .map(|&(x2, y2)| ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt())
                .collect()
        })
        .collect();
    validate_metric(&rows).expect("euclidean distances form a metric")
}

/// The 6-vertex triangulation of the projective plane (every edge in exactly
/// two of the ten faces).
fn hemi_icosahedron() -> (usize, Vec<[usize; 3]>) {
    let faces = vec![
        [0, 1, 2],
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 5],
        [0, 1, 5],
        [1, 2, 4],
        [2, 3, 5],
        [3, 4, 1],
        [4, 5, 2],
        [5, 1, 3],
    ];
    (6, faces)
}

/// A flag triangulation of the projective plane as a metric space: the
/// barycentric subdivision of the 6-vertex triangulation, with unit edges
/// and distance 2 otherwise. Its Rips 2-skeleton just above scale 1 is the
/// subdivision itself, so the scale group there is Z/2.
pub fn flag_projective_plane() -> FiniteMetricSpace {
    let (nv, faces) = hemi_icosahedron();
    // subdivision vertices: original vertices, edge midpoints, face centers
    let mut edge_ids: Vec<(usize, usize)> = Vec::new();
    for f in &faces {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
            let key = (a.min(b), a.max(b));
            if !edge_ids.contains(&key) {
                edge_ids.push(key);
            }
        }
    }
    edge_ids.sort_unstable();
    let edge_index = |a: usize, b: usize| -> usize {
        let key = (a.min(b), a.max(b));
        nv + edge_ids.binary_search(&key).unwrap()
    };
    let ne = edge_ids.len();
    let face_index = |fi: usize| nv + ne + fi;
    let n = nv + ne + faces.len();
    // subdivision edges: vertex-edge, vertex-face, edge-face incidences
    let mut adj = vec![vec![false; n]; n];
    let connect = |a: usize, b: usize, adj: &mut Vec<Vec<bool>>| {
        adj[a][b] = true;
        adj[b][a] = true;
    };
    for (fi, f) in faces.iter().enumerate() {
        let fc = face_index(fi);
        for &v in f {
            connect(v, fc, &mut adj);
        }
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[0], f[2])] {
            let e = edge_index(a, b);
            connect(a, e, &mut adj);
            connect(b, e, &mut adj);
            connect(e, fc, &mut adj);
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else if adj[i][j] {
                        1.0
                    } else {
                        2.0
                    }
                })
                .collect()
        })
        .collect();
    validate_metric(&rows).expect("flag projective plane is a metric")
}

/// An essential loop of the flag projective plane at the scale just above 1,
/// found through the presentation: the group there is Z/2, so some generator
/// maps to the nontrivial element of the closed coset table.
pub fn projective_plane_loop(space: &FiniteMetricSpace) -> crate::chains::Chain {
    use crate::rips::{presentation, realize_word, scale_set, ScalePoint, Word};
    let scales = scale_set(space);
    let sp = ScalePoint::above(1);
    let pres = presentation(space, &scales, sp, space.basepoint()).expect("connected at scale 1");
    let table = crate::coset::enumerate_trivial(pres.n_generators(), &pres.relators, 10_000)
        .expect("Z/2 enumeration closes");
    assert_eq!(
        table.order(),
        2,
        "scale group of the flag projective plane is Z/2"
    );
    for g in 0..pres.n_generators() {
        let w = Word(vec![(g + 1) as i32]);
        if !table.is_identity_word(&w) {
            return realize_word(&scales, sp, &pres, &w).expect("generator loop realizes");
        }
    }
    unreachable!("a nontrivial generator exists");
}
