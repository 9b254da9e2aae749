use rand::{Rng as _, SeedableRng};

use super::*;
use crate::augmentation::{apply_channel_mask_tensor, build_channel_mask};
use crate::autograd::{no_grad, Var};
use crate::data::ElectrodeLayout;
use crate::nn::Module;
use crate::seed::{self, Rng};
use crate::tensor::Tensor;

fn random_batch(n: usize, c: usize, rng: &mut Rng) -> Tensor {
    Tensor::from_fn(&[n, c, 9, 9], |_| rng.random::<f64>() * 2.0 - 1.0)
}

fn conv(i: usize, o: usize, k: usize) -> usize {
    i * o * k * k + o
}

#[test]
fn paper_parameter_counts() {
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let g = Generator::new(GeneratorSpec::paper(), mask, &mut seed::stream(1, "g", 0)).unwrap();
    let enc = conv(128, 64, 3) + conv(64, 32, 5) + conv(32, 16, 5) + conv(16, 8, 3);
    let dec = conv(24, 16, 3) + conv(48, 32, 3) + conv(96, 128, 3);
    assert_eq!(g.parameter_count(), enc + dec);
    assert_eq!(g.parameter_count(), 267_048);

    let trunk = conv(128, 64, 3) + conv(64, 32, 5) + conv(32, 16, 5)
        + (16 * 9 + 16) + conv(16, 16, 1)
        + conv(16, 16, 1) + conv(16, 8, 3) + conv(16, 8, 5);
    let d = StNet::new(StNetSpec::paper(1, 0.0), &mut seed::stream(1, "d", 0)).unwrap();
    assert_eq!(d.parameter_count(), trunk + 2592 * 1024 + 1024 + 1025);
    let c = StNet::new(StNetSpec::paper(4, 0.5), &mut seed::stream(1, "c", 0)).unwrap();
    assert_eq!(c.parameter_count(), trunk + 2592 * 1024 + 1024 + 4 * 1024 + 4);
}

#[test]
fn desk_parameter_counts_are_stable() {
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let g = Generator::new(GeneratorSpec::desk(), mask, &mut seed::stream(1, "g", 0)).unwrap();
    let expected = conv(128, 16, 3) + conv(16, 8, 5) + conv(8, 8, 5) + conv(8, 4, 3)
        + conv(12, 8, 3) + conv(16, 16, 3) + conv(32, 128, 3);
    assert_eq!(g.parameter_count(), expected);
    let d = StNet::new(StNetSpec::desk(2, 0.5), &mut seed::stream(1, "d", 0)).unwrap();
    let expected = conv(128, 16, 3) + conv(16, 8, 5) + conv(8, 8, 5) + (8 * 9 + 8) + conv(8, 8, 1)
        + conv(8, 4, 1) + conv(8, 2, 3) + conv(8, 2, 5) + 648 * 64 + 64 + 2 * 64 + 2;
    assert_eq!(d.parameter_count(), expected);
}

#[test]
fn paper_shape_contracts() {
    let mut rng = seed::stream(2, "x", 0);
    let x = random_batch(2, 128, &mut rng);
    for layout in [ElectrodeLayout::deap32(), ElectrodeLayout::dreamer14()] {
        let mask = build_channel_mask(&layout);
        let g = Generator::new(GeneratorSpec::paper(), mask.clone(), &mut rng).unwrap();
        let y = g.generate(&x).unwrap();
        assert_eq!(y.shape(), &[2, 128, 9, 9]);
        assert_eq!(apply_channel_mask_tensor(&y, &mask).unwrap(), y);
        let off = 81 - layout.channel_count();
        let zero_cells = (0..81).filter(|&cell| (0..2 * 128).all(|k| y.data()[k * 81 + cell] == 0.0)).count();
        assert!(zero_cells >= off);
    }
    let d = StNet::new(StNetSpec::paper(1, 0.0), &mut rng).unwrap();
    assert_eq!(d.spec.flatten_dim(), 2592);
    assert_eq!(d.predict(&x).unwrap().shape(), &[2]);
    for head in [2, 4] {
        let c = StNet::new(StNetSpec::paper(head, 0.5), &mut rng).unwrap();
        let p = c.predict(&x).unwrap();
        assert_eq!(p.shape(), &[2, head]);
        for row in p.data().chunks(head) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6 && row.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(c.extract(&x).unwrap().shape(), &[2, 1024]);
        let trunk = no_grad(|| c.trunk(&Var::constant(x.clone()), None).value());
        assert_eq!(trunk.shape(), &[2, 2592]);
    }
}

#[test]
fn wrong_input_shape_is_an_argument_error() {
    let mut rng = seed::stream(3, "x", 0);
    let c = StNet::new(StNetSpec::desk(2, 0.5), &mut rng).unwrap();
    assert!(matches!(c.predict(&Tensor::zeros(&[1, 64, 9, 9])), Err(crate::Error::Argument(_))));
    let g = Generator::new(GeneratorSpec::desk(), build_channel_mask(&ElectrodeLayout::deap32()), &mut rng).unwrap();
    assert!(g.generate(&Tensor::zeros(&[1, 128, 8, 8])).is_err());
    let mut nan = Tensor::zeros(&[1, 128, 9, 9]);
    nan.data_mut()[5] = f64::NAN;
    assert!(matches!(g.generate(&nan), Err(crate::Error::Numeric(_))));
}

#[test]
fn zero_input_and_determinism() {
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let g = Generator::new(GeneratorSpec::desk(), mask.clone(), &mut seed::stream(4, "g", 0)).unwrap();
    let z = g.generate(&Tensor::zeros(&[1, 128, 9, 9])).unwrap();
    assert!(z.all_finite());
    assert_eq!(apply_channel_mask_tensor(&z, &mask).unwrap(), z);
    let x = random_batch(3, 128, &mut Rng::seed_from_u64(0));
    assert_eq!(g.generate(&x).unwrap(), g.generate(&x).unwrap());
    let g2 = Generator::new(GeneratorSpec::desk(), mask, &mut seed::stream(4, "g", 0)).unwrap();
    assert_eq!(g.generate(&x).unwrap(), g2.generate(&x).unwrap());
}

#[test]
fn ablation_variants_build() {
    let mask = build_channel_mask(&ElectrodeLayout::deap32());
    let mut rng = seed::stream(5, "v", 0);
    let x = random_batch(1, 128, &mut rng);
    let ae = GeneratorSpec { skip_connections: false, ..GeneratorSpec::desk() };
    assert_eq!(ae.decoder_inputs(), vec![4, 8, 16]);
    let g = Generator::new(ae, mask.clone(), &mut rng).unwrap();
    assert_eq!(g.generate(&x).unwrap().shape(), &[1, 128, 9, 9]);

    let unmasked = GeneratorSpec { channel_masking: false, ..GeneratorSpec::desk() };
    let g = Generator::new(unmasked, mask.clone(), &mut rng).unwrap();
    let y = g.generate(&x).unwrap();
    assert_ne!(apply_channel_mask_tensor(&y, &mask).unwrap(), y);

    let plain = StNetSpec { kind: StNetKind::PlainConv, ..StNetSpec::paper(2, 0.5) };
    let c = StNet::new(plain, &mut rng).unwrap();
    assert_eq!(c.extract(&x).unwrap().shape(), &[1, 1024]);
}

#[test]
fn zero_head_critic_scores_zero() {
    let mut rng = seed::stream(6, "d", 0);
    let d = StNet::new(StNetSpec::desk(1, 0.0), &mut rng).unwrap();
    d.head.weight.set_value(Tensor::zeros(&d.head.weight.shape()));
    let s = d.predict(&random_batch(64, 128, &mut rng)).unwrap();
    assert_eq!(s.shape(), &[64]);
    assert!(s.data().iter().all(|&v| v == 0.0));
}

#[test]
fn dropout_only_in_training_mode() {
    let mut rng = seed::stream(7, "c", 0);
    let c = StNet::new(StNetSpec::desk(2, 0.5), &mut rng).unwrap();
    let x = Var::constant(random_batch(2, 128, &mut rng));
    no_grad(|| {
        assert_eq!(c.probs(&x, None).value(), c.probs(&x, None).value());
        let a = c.probs(&x, Some(&mut rng)).value();
        let b = c.probs(&x, Some(&mut rng)).value();
        assert_ne!(a, b);
    });
}

#[test]
fn classifier_decomposes_into_head_over_features() {
    let mut rng = seed::stream(8, "c", 0);
    let c = StNet::new(StNetSpec::desk(4, 0.5), &mut rng).unwrap();
    let x = random_batch(3, 128, &mut rng);
    let f = c.extract(&x).unwrap();
    let p = c.predict(&x).unwrap();
    let w = c.head.weight.value();
    let b = c.head.bias.value();
    for i in 0..3 {
        let logits: Vec<f64> = (0..4)
            .map(|k| b.data()[k] + (0..f.shape()[1]).map(|j| w.data()[k * f.shape()[1] + j] * f.data()[i * f.shape()[1] + j]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::MIN, f64::max);
        let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
        for k in 0..4 {
            assert!(((logits[k] - m).exp() / z - p.data()[i * 4 + k]).abs() < 1e-12);
        }
    }
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seed::stream(9, "ck", 0);
    let mask = build_channel_mask(&ElectrodeLayout::dreamer14());
    let g = Generator::new(GeneratorSpec::desk(), mask, &mut rng).unwrap();
    let c = StNet::new(StNetSpec::desk(2, 0.5), &mut rng).unwrap();
    let x = random_batch(2, 128, &mut rng);
    let meta = CheckpointMeta { epoch: 3, config_hash: "h".into(), layout: "dreamer14".into(), seed: 9, ..Default::default() };

    let params = c.parameters();
    let mut opt = crate::nn::Adam::new(
        crate::nn::AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.99, eps: 1e-8, weight_decay: 5e-4 },
        &params,
    );
    let grads: Vec<Var> = params.iter().map(|p| Var::constant(p.value().map(|v| v * 0.1 + 0.01))).collect();
    opt.step(&params, &grads);

    save_generator(&dir.path().join("g.json"), &g, &meta, None).unwrap();
    save_stnet(&dir.path().join("c.json"), Role::C, &c, &meta, Some(opt.state())).unwrap();
    let g2 = load_generator(&dir.path().join("g.json")).unwrap();
    let c2 = load_stnet(&dir.path().join("c.json")).unwrap();
    assert!(g2.optimizer.is_none());
    assert_eq!(g2.manifest.epoch, 3);
    assert_eq!(g2.model.mask, g.mask);
    assert_eq!(c2.optimizer.as_ref(), Some(opt.state()));
    let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&g.generate(&x).unwrap()), bits(&g2.model.generate(&x).unwrap()));
    assert_eq!(bits(&c.predict(&x).unwrap()), bits(&c2.model.predict(&x).unwrap()));

    assert!(load_generator(&dir.path().join("c.json")).is_err());
    let mut blob = std::fs::read(dir.path().join("g.bin")).unwrap();
    let last = blob.len() - 1;
    blob[last] ^= 1;
    std::fs::write(dir.path().join("g.bin"), blob).unwrap();
    assert!(matches!(load_generator(&dir.path().join("g.json")), Err(crate::Error::Checkpoint(_))));
}
