use indep_stream::estimator::{Cell, EstimatorConfig, IndependenceEstimator};
use indep_stream::hashing::ZeroOneHash;
use indep_stream::sketch::{ProductSketchState, SketchShape};

fn tuples(k: usize, n: u32, m: usize) -> Vec<Vec<u32>> {
    (0..m as u32)
        .map(|i| (0..k as u32).map(|j| (i * (2 * j + 1) + i / 3 + j) % n + 1).collect())
        .collect()
}

fn estimator(k: usize, n: u32, data: &[Vec<u32>]) -> IndependenceEstimator {
    let mut cfg = EstimatorConfig::new(0.3, 0.1, 17);
    cfg.apply_override("amplification", "1").unwrap();
    cfg.chunk_size = 7;
    let mut est = IndependenceEstimator::new(k, n, cfg).unwrap();
    for t in data {
        est.update(t).unwrap();
    }
    est
}

fn mask(est: &IndependenceEstimator, depth: usize, cell: &Cell) -> ZeroOneHash {
    let stage = est.stage(0, depth);
    ZeroOneHash::from_table((1..=est.n() as u64).map(|x| stage.contains(cell, x)).collect())
}

fn cell_for(est: &IndependenceEstimator, depth: usize, x: u64, round: u32) -> Cell {
    let stage = est.stage(0, depth);
    Cell {
        level: 0,
        bucket: stage.bucket_of(x),
        round,
        side: stage.round(round).contains(x),
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(1.0)
}

fn reference(
    k: usize,
    n: u32,
    data: &[Vec<u32>],
    hashes: Vec<ZeroOneHash>,
    summed: usize,
    fam: indep_stream::sketch::CauchyFamilies,
) -> (f64, f64) {
    let shape = SketchShape::new(k, n, hashes.len(), summed).unwrap();
    let mut s = ProductSketchState::new(shape, hashes, fam).unwrap();
    for t in data {
        s.update(t).unwrap();
    }
    let m = data.len() as f64;
    let scale = m.powi(k as i32) * s.joint().abs() + m * s.margins().iter().map(|x| x.abs()).product::<f64>();
    (s.value().unwrap(), scale)
}

#[test]
fn coarse_values_match_standalone_sketches() {
    for (k, n) in [(2usize, 5u32), (3, 3)] {
        let data = tuples(k, n, 40);
        let mut est = estimator(k, n, &data);
        let mut path = Vec::new();
        for d in 0..k - 1 {
            path.push(cell_for(&est, d, data[3][d] as u64, d as u32));
            let hashes: Vec<ZeroOneHash> = path.iter().enumerate().map(|(e, c)| mask(&est, e, c)).collect();
            let got = est.coarse_values(0, &path).unwrap();
            for (rep, &v) in got.iter().enumerate().take(25) {
                let fam = est.coarse_families(0, d, rep).clone();
                let (want, scale) = reference(k, n, &data, hashes.clone(), d, fam);
                assert!(close(v, want, scale), "k={k} depth {d} rep {rep}: {v} vs {want}");
            }
        }
    }
}

#[test]
fn fine_values_match_standalone_sketches() {
    for (k, n) in [(2usize, 6u32), (3, 3)] {
        let data = tuples(k, n, 50);
        let mut est = estimator(k, n, &data);
        let path: Vec<Cell> = (0..k - 1).map(|d| cell_for(&est, d, data[5][d] as u64, 2)).collect();
        let hashes: Vec<ZeroOneHash> = path.iter().enumerate().map(|(e, c)| mask(&est, e, c)).collect();
        let got = est.fine_values(0, &path).unwrap();
        assert!(!got.is_empty());
        for (rep, &v) in got.iter().enumerate().take(25) {
            let fam = est.fine_families(0, rep).clone();
            let (want, scale) = reference(k, n, &data, hashes.clone(), k - 1, fam);
            assert!(close(v, want, scale), "k={k} rep {rep}: {v} vs {want}");
        }
    }
}

#[test]
fn fine_values_need_a_full_path() {
    let data = tuples(3, 3, 10);
    let mut est = estimator(3, 3, &data);
    let cell = cell_for(&est, 0, 1, 0);
    assert!(est.fine_values(0, &[cell]).is_err());
}

#[test]
fn estimate_is_deterministic_and_resumable() {
    let data = tuples(2, 4, 300);
    let mut a = estimator(2, 4, &data);
    let mut b = estimator(2, 4, &data);
    let x = a.estimate().unwrap();
    assert_eq!(x, b.estimate().unwrap());
    a.update(&[1, 1]).unwrap();
    assert_eq!(a.estimate().unwrap().m, 301);
}
