use harmlat::correlations::{correlation_sequence, BlockFunction, EngineOptions};
use harmlat::lattice::{BlockStencil, CouplingStencil, SystemSize};
use harmlat::symplectic::{ground_state, Tolerances};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_gapped_stencil_1d(rng: &mut impl Rng) -> CouplingStencil {
    let mut block = |on_min: f64| {
        let c1 = rng.gen_range(-0.3..0.3);
        let c2 = rng.gen_range(-0.15..0.15);
        let on = on_min + rng.gen_range(0.0..1.0);
        BlockStencil::from_entries(
            1,
            [(vec![0], on), (vec![1], c1), (vec![-1], c1), (vec![2], c2), (vec![-2], c2)],
        )
        .unwrap()
    };
    let q = block(1.5);
    let p = block(1.5);
    let g = rng.gen_range(-0.1..0.1);
    let qp = BlockStencil::from_entries(1, [(vec![1], g), (vec![-1], g)]).unwrap();
    CouplingStencil::new(1, q, p, qp).unwrap()
}

fn main() {
    let tols = Tolerances::default();
    let opts = EngineOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let s = random_gapped_stencil_1d(&mut rng);
        let n = 16usize;
        let h = s.dense_hamiltonian(n).unwrap();
        let (cm, _, _) = ground_state(&h, &tols).unwrap();
        let offsets: Vec<Vec<i64>> = (0..=8).map(|k| vec![k]).collect();
        for (f, pick) in [
            (BlockFunction::GammaQ, 0usize),
            (BlockFunction::GammaP, 1),
            (BlockFunction::GammaQP, 2),
        ] {
            let seq = correlation_sequence(&s, f, &offsets, SystemSize::Finite(n), &opts).unwrap();
            for (o, v) in seq.offsets.iter().zip(&seq.values) {
                let k = o[0].rem_euclid(n as i64) as usize;
                let dense = match pick {
                    0 => cm.matrix()[(k, 0)],
                    1 => cm.matrix()[(n + k, n)],
                    _ => cm.matrix()[(k, n)],
                };
                let diff = (v - dense).abs();
                if diff > 1e-10 {
                    println!("trial {trial} {f:?} n={k}: fft {v:+.9} dense {dense:+.9} diff {diff:.2e}");
                    return;
                }
            }
        }
    }
    println!("all 1D fine");
}
