//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use camplace::provenance::Provenance;
use camplace::solvers::ProblemInstance;
use camplace::visibility::VisibilityMatrix;
use camplace::BitVec;
use rand::Rng;

pub struct OwnedInstance {
    pub matrix: VisibilityMatrix,
    pub gamma: Vec<u32>,
    pub groups: Vec<u32>,
}

impl OwnedInstance {
    pub fn view(&self) -> ProblemInstance<'_> {
        ProblemInstance::new(&self.matrix, &self.gamma, &self.groups).unwrap()
    }
}

pub fn instance(n_p: usize, rows: &[&[usize]], gamma: &[u32], groups: &[u32]) -> OwnedInstance {
    let rows: Vec<BitVec> = rows
        .iter()
        .map(|ones| {
            let mut r = BitVec::zeros(n_p);
            for &j in *ones {
                r.set(j, true);
            }
            r
        })
        .collect();
    OwnedInstance {
        matrix: VisibilityMatrix {
            n_g: rows.len(),
            n_p,
            rows,
            provenance: Provenance([0u8; 32]),
        },
        gamma: gamma.to_vec(),
        groups: groups.to_vec(),
    }
}

pub fn random_instance(
    rng: &mut impl Rng,
    n_g: usize,
    n_p: usize,
    n_l: usize,
    density: f64,
    gamma_max: u32,
) -> OwnedInstance {
    let mut rows: Vec<BitVec> = Vec::new();
    for _ in 0..n_g {
        let mut r = BitVec::zeros(n_p);
        for j in 0..n_p {
            if rng.gen_bool(density) {
                r.set(j, true);
            }
        }
        rows.push(r);
    }
    let gamma: Vec<u32> = (0..n_p).map(|_| rng.gen_range(1..=gamma_max)).collect();
    let groups: Vec<u32> = (0..n_g).map(|i| (i % n_l) as u32).collect();
    OwnedInstance {
        matrix: VisibilityMatrix {
            n_g,
            n_p,
            rows,
            provenance: Provenance([0u8; 32]),
        },
        gamma,
        groups,
    }
}
