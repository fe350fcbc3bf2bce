use kqi::artifacts::Layout;
use kqi::stages::{cmd_all, load_model, load_test};
use kqi::timing::ptime_us;
use kqi::RunConfig;
use kqi_core::features::Strategy;
use kqi_core::regressors::Family;
use kqi_core::schema::Kqi;
use kqi_core::Matrix;
use tempfile::TempDir;

fn best_of(chain: &kqi_core::pipeline::ModelChain, x: &Matrix) -> f64 {
    (0..5).map(|_| ptime_us(chain, x, 20).unwrap()).fold(f64::INFINITY, f64::min)
}

#[test]
fn prediction_time_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = RunConfig {
        out: dir.path().into(),
        experiments: 3,
        families: vec![Family::Rr, Family::Rf],
        kqis: vec![Kqi::LatencyMs],
        strategies: vec![Strategy::NoFe],
        ..Default::default()
    };
    cmd_all(&cfg).unwrap();
    let layout = Layout::new(dir.path());
    let test = load_test(&layout, &cfg).unwrap();
    let rr = load_model(&layout, Kqi::LatencyMs, Strategy::NoFe, Family::Rr).unwrap();
    let rf = load_model(&layout, Kqi::LatencyMs, Strategy::NoFe, Family::Rf).unwrap();
    assert!(best_of(&rr, &test.x) <= best_of(&rf, &test.x));

    let mut doubled = test.x.as_slice().to_vec();
    doubled.extend_from_slice(test.x.as_slice());
    let doubled = Matrix::from_vec(2 * test.x.rows(), test.x.cols(), doubled).unwrap();
    let (once, twice) = (best_of(&rf, &test.x), best_of(&rf, &doubled));
    assert!(twice <= 2.0 * once && once <= 2.0 * twice, "{once} vs {twice}");
}
