use criterion::{criterion_group, criterion_main, Criterion};

use fusedrive_core::models::{ArchitectureConfig, DepthNet, SegmentationAutoencoder};
use fusedrive_core::numerics::{softmax_cross_entropy_grad, Conv2d, Tensor};
use fusedrive_core::rng::Rng;
use fusedrive_core::synthworld::{build_track, render_view, VehicleState, Weather};

fn bench_conv(c: &mut Criterion) {
    let mut rng = Rng::new(1);
    let mut valid = Conv2d::new(3, 8, 5, 2, 0, &mut rng);
    let x_valid = Tensor::uniform(vec![3, 128, 128], 0.5, &mut rng);
    c.bench_function("conv k5/s2 valid 3->8 @128", |b| {
        b.iter(|| valid.forward(&x_valid))
    });

    let mut padded = Conv2d::new(6, 6, 3, 1, 1, &mut rng);
    let x_pad = Tensor::uniform(vec![6, 128, 128], 0.5, &mut rng);
    c.bench_function("conv k3/s1/p1 6->6 @128", |b| b.iter(|| padded.forward(&x_pad)));
}

fn bench_depth_net(c: &mut Criterion) {
    let mut rng = Rng::new(2);
    let mut net = DepthNet::new(ArchitectureConfig::default(), &mut rng);
    let depth = Tensor::uniform(vec![1, 128, 128], 0.5, &mut rng);
    c.bench_function("depth net forward", |b| b.iter(|| net.forward(&depth)));
}

fn bench_autoencoder(c: &mut Criterion) {
    let mut rng = Rng::new(3);
    let mut net = SegmentationAutoencoder::new(ArchitectureConfig::default(), &mut rng);
    let rgb = Tensor::uniform(vec![3, 128, 128], 0.5, &mut rng);
    let labels: Vec<u8> = (0..128 * 128).map(|_| rng.below(4) as u8).collect();
    c.bench_function("autoencoder forward", |b| b.iter(|| net.forward(&rgb)));

    let logits = net.forward(&rgb);
    let dlogits = softmax_cross_entropy_grad(&logits, &labels);
    c.bench_function("autoencoder forward+backward", |b| {
        b.iter(|| {
            let _ = net.forward(&rgb);
            net.backward(&dlogits);
        })
    });
}

fn bench_renderer(c: &mut Criterion) {
    let track = build_track(4);
    let weather = Weather::train_clear();
    let state = VehicleState {
        s: 30.0,
        lateral: 0.4,
        heading_err: 0.05,
        speed: 8.0,
    };
    let mut rng = Rng::new(5);
    c.bench_function("render view 128x128", |b| {
        b.iter(|| render_view(&state, &track, &weather, &mut rng))
    });
}

criterion_group!(benches, bench_conv, bench_depth_net, bench_autoencoder, bench_renderer);
criterion_main!(benches);
