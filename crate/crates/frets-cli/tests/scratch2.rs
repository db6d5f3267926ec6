//! Temporary micro-profiling (not part of the suite).

use std::time::Instant;

use frets_core::model::{frets_backward, frets_forward, init_params, ModelConfig};
use frets_core::rng;
use frets_core::tensor::RealTensor;

type T = RealTensor<f64>;

fn rand_t(stream: &mut rng::DetRng, shape: &[usize]) -> T {
    let n: usize = shape.iter().product();
    T::from_vec(shape, (0..n).map(|_| rng::uniform(stream, -1.0, 1.0)).collect()).unwrap()
}

#[test]
#[ignore]
fn profile_batch() {
    let mut stream = rng::seeded(1);
    let mut cfg = ModelConfig::new(4, 96, 96);
    cfg.embed_dim = 16;
    let params = init_params(&cfg).unwrap();
    let x = rand_t(&mut stream, &[32, 4, 96]);
    let targets = rand_t(&mut stream, &[32, 4, 96]);

    // Warm up.
    let _ = frets_backward(&x, &targets, &params, &cfg).unwrap();

    let t0 = Instant::now();
    for _ in 0..5 {
        let _ = frets_forward(&x, &params, &cfg).unwrap();
    }
    eprintln!("forward: {:.1} ms", t0.elapsed().as_secs_f64() * 200.0);

    let t0 = Instant::now();
    for _ in 0..5 {
        let _ = frets_backward(&x, &targets, &params, &cfg).unwrap();
    }
    eprintln!("forward+backward: {:.1} ms", t0.elapsed().as_secs_f64() * 200.0);

    // Projection-sized matmuls.
    let a = rand_t(&mut stream, &[128, 1536]);
    let b = rand_t(&mut stream, &[1536, 256]);
    let t0 = Instant::now();
    for _ in 0..10 {
        let _ = a.matmul(&b).unwrap();
    }
    eprintln!("matmul 128x1536x256: {:.1} ms", t0.elapsed().as_secs_f64() * 100.0);

    let dpre = rand_t(&mut stream, &[128, 256]);
    let t0 = Instant::now();
    for _ in 0..10 {
        let _ = a.matmul_at(&dpre).unwrap();
    }
    eprintln!("matmul_at 1536x128x256: {:.1} ms", t0.elapsed().as_secs_f64() * 100.0);

    let t0 = Instant::now();
    for _ in 0..10 {
        let _ = dpre.matmul_bt(&b).unwrap();
    }
    eprintln!("matmul_bt 128x256x1536: {:.1} ms", t0.elapsed().as_secs_f64() * 100.0);

    // Temporal learner FFT path.
    let h = rand_t(&mut stream, &[32, 4, 96, 16]);
    let t0 = Instant::now();
    for _ in 0..10 {
        let spec = frets_core::fft::rfft(&h, 2).unwrap();
        let _ = frets_core::fft::irfft(&spec, 96, 2).unwrap();
    }
    eprintln!("temporal rfft+irfft: {:.1} ms", t0.elapsed().as_secs_f64() * 100.0);
}
