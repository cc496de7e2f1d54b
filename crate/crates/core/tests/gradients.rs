//! Finite-difference checks of every analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unilogic::network::{build_network, LogicNetwork, NetworkConfig, Normalizer};
use unilogic::ops::{
    binary_op_smooth, binary_op_smooth_grads, squash, squash_grad, Alpha, SquashParams, UnitValue,
};
use unilogic::training::{BaselineConfig, DenseNetwork, Trainable};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

fn near_ramp_corner(t: f64, p: &SquashParams) -> bool {
    let d = (t - p.center).abs();
    (d - 0.5 * p.ramp_width).abs() < 0.05
}

#[test]
fn squash_gradient_matches_central_difference() {
    let p = SquashParams::default();
    let h = 1e-5;
    let mut checked = 0;
    for i in 0..=400 {
        let x = -0.5 + i as f64 * 0.005;
        if near_ramp_corner(x, &p) {
            continue;
        }
        let g = squash_grad(x, &p).unwrap();
        let fd = (squash(x + h, &p).unwrap().get() - squash(x - h, &p).unwrap().get()) / (2.0 * h);
        if g.abs() < 1e-3 && fd.abs() < 1e-3 {
            continue;
        }
        assert!(rel_err(g, fd) < 1e-5, "x={x}: {g} vs {fd}");
        checked += 1;
    }
    assert!(checked > 150);
}

#[test]
fn binary_op_gradients_match_central_difference() {
    let p = SquashParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let mut checked = 0;
    while checked < 500 {
        let (x, y, a): (f64, f64, f64) = (
            rng.gen_range(0.01..0.99),
            rng.gen_range(0.01..0.99),
            rng.gen_range(0.01..0.99),
        );
        let t = x + y - a;
        if near_ramp_corner(t, &p) {
            continue;
        }
        let f = |x: f64, y: f64, a: f64| {
            binary_op_smooth(
                UnitValue::new(x).unwrap(),
                UnitValue::new(y).unwrap(),
                Alpha::new(a).unwrap(),
                &p,
            )
            .get()
        };
        let g = binary_op_smooth_grads(
            UnitValue::new(x).unwrap(),
            UnitValue::new(y).unwrap(),
            Alpha::new(a).unwrap(),
            &p,
        );
        if g.dx.abs() < 1e-3 {
            continue;
        }
        let dx = (f(x + h, y, a) - f(x - h, y, a)) / (2.0 * h);
        let dy = (f(x, y + h, a) - f(x, y - h, a)) / (2.0 * h);
        let da = (f(x, y, a + h) - f(x, y, a - h)) / (2.0 * h);
        assert!(rel_err(g.dx, dx) < 1e-5, "dx at {x},{y},{a}");
        assert!(rel_err(g.dy, dy) < 1e-5, "dy at {x},{y},{a}");
        assert!(rel_err(g.dalpha, da) < 1e-5, "dalpha at {x},{y},{a}");
        checked += 1;
    }
}

/// `Σ (score - target)²` for one sample.
fn sample_loss<M: Trainable>(net: &M, x: &[f64], label: usize) -> f64 {
    let mut g = net.zero_grads();
    net.accumulate_sample(x, label, &mut g).unwrap()
}

fn check_network(features: usize, classes: usize, parts: usize, seed: u64) -> usize {
    let cfg = NetworkConfig {
        hidden_width: 5,
        logic_parts: parts,
        seed,
        ..Default::default()
    };
    let mut net = build_network(features, classes, &cfg).unwrap();
    // larger weights than the default init so that gradients are not tiny
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for part in &mut net.parts {
        for w in &mut part.selector.data {
            *w = rng.gen_range(-0.6..0.6);
        }
    }
    LogicNetwork::set_normalizer(
        &mut net,
        Normalizer {
            bounds: vec![(-2.0, 3.0); features],
        },
    )
    .unwrap();
    let x: Vec<f64> = (0..features).map(|_| rng.gen_range(-2.0..3.0)).collect();
    let label = rng.gen_range(0..classes);

    let (_, cache) = net.forward(&x).unwrap();
    if cache
        .parts
        .iter()
        .flat_map(|c| &c.selector_raw)
        .any(|r| (r.abs() - 1.0).abs() < 1e-3)
    {
        return 0;
    }
    let mut grads = net.zero_grads();
    net.accumulate_sample(&x, label, &mut grads).unwrap();

    let h = 1e-4;
    let mut checked = 0;
    for pi in 0..net.parts.len() {
        for j in 0..net.parts[pi].alphas.len() {
            let a0 = net.parts[pi].alphas[j];
            if a0 < h || a0 > 1.0 - h {
                continue;
            }
            let mut plus = net.clone();
            plus.parts[pi].alphas[j] = a0 + h;
            plus.touch();
            let mut minus = net.clone();
            minus.parts[pi].alphas[j] = a0 - h;
            minus.touch();
            let fd = (sample_loss(&plus, &x, label) - sample_loss(&minus, &x, label)) / (2.0 * h);
            let g = grads.alphas[pi][j];
            if g.abs() < 1e-7 && fd.abs() < 1e-7 {
                continue;
            }
            assert!(
                rel_err(g, fd) < 1e-3,
                "alpha part {pi} slot {j}: {g} vs {fd}"
            );
            checked += 1;
        }
        for k in 0..net.parts[pi].selector.data.len() {
            let w0 = net.parts[pi].selector.data[k];
            let mut plus = net.clone();
            plus.parts[pi].selector.data[k] = w0 + h;
            plus.touch();
            let mut minus = net.clone();
            minus.parts[pi].selector.data[k] = w0 - h;
            minus.touch();
            let fd = (sample_loss(&plus, &x, label) - sample_loss(&minus, &x, label)) / (2.0 * h);
            let g = grads.selectors[pi].data[k];
            if g.abs() < 1e-7 && fd.abs() < 1e-7 {
                continue;
            }
            assert!(
                rel_err(g, fd) < 1e-3,
                "weight part {pi} entry {k}: {g} vs {fd}"
            );
            checked += 1;
        }
    }
    checked
}

#[test]
fn network_gradients_match_central_difference() {
    let configs = [(4, 2, 2), (3, 3, 2), (5, 2, 1), (4, 4, 2), (6, 2, 2)];
    let mut total = 0;
    let mut configurations = 0;
    for (i, &(f, c, parts)) in configs.iter().enumerate() {
        for seed in 0..3 {
            let n = check_network(f, c, parts, 10 * i as u64 + seed);
            if n > 0 {
                configurations += 1;
            }
            total += n;
        }
    }
    assert!(
        configurations >= 3,
        "only {configurations} usable configurations"
    );
    assert!(total > 200, "only {total} gradients checked");
}

#[test]
fn saturated_slot_gets_no_alpha_gradient() {
    let mut net = build_network(
        2,
        2,
        &NetworkConfig {
            logic_parts: 1,
            ..Default::default()
        },
    )
    .unwrap();
    net.parts[0].alphas[0] = 0.0;
    net.parts[0].selector.data.iter_mut().for_each(|w| *w = 0.1);
    // x + y - α = 2, far above the ramp
    let (_, cache) = net.forward(&[1.0, 1.0]).unwrap();
    let g = net.backward(&cache, &[1.0]).unwrap();
    assert!(g.alphas[0][0].abs() < 1e-12);
}

#[test]
fn dense_baseline_gradients_match_central_difference() {
    let cfg = BaselineConfig {
        widths: vec![3, 6, 4, 3],
        seed: 5,
    };
    let net = DenseNetwork::new(3, &cfg).unwrap();
    let x = [0.3, -0.7, 0.5];
    let label = 1;
    let mut grads = net.zero_grads();
    net.accumulate_sample(&x, label, &mut grads).unwrap();
    let loss = |n: &DenseNetwork| sample_loss(n, &x, label);
    let h = 1e-5;
    for l in 0..net.layers.len() {
        for k in 0..net.layers[l].weights.data.len() {
            let mut plus = net.clone();
            plus.layers[l].weights.data[k] += h;
            let mut minus = net.clone();
            minus.layers[l].weights.data[k] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let g = grads.layers[l].weights.data[k];
            assert!(
                rel_err(g, fd) < 1e-4 || (g - fd).abs() < 1e-9,
                "layer {l} weight {k}: {g} vs {fd}"
            );
        }
        for k in 0..net.layers[l].bias.len() {
            let mut plus = net.clone();
            plus.layers[l].bias[k] += h;
            let mut minus = net.clone();
            minus.layers[l].bias[k] -= h;
            let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let g = grads.layers[l].bias[k];
            assert!(
                rel_err(g, fd) < 1e-4 || (g - fd).abs() < 1e-9,
                "layer {l} bias {k}"
            );
        }
    }
}
