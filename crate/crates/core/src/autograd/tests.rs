use super::*;
use crate::tensor::Tensor;

fn pseudo(shape: &[usize], seed: u64) -> Tensor {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    Tensor::from_fn(shape, |_| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    })
}

/// Central differences of a scalar function over every coordinate of `x`.
fn numeric_grad(x: &Tensor, f: &dyn Fn(&Tensor) -> f64) -> Tensor {
    let h = 1e-6;
    let mut out = vec![0.0; x.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut p = x.clone();
        p.data_mut()[i] += h;
        let mut m = x.clone();
        m.data_mut()[i] -= h;
        *o = (f(&p) - f(&m)) / (2.0 * h);
    }
    Tensor::new(x.shape().to_vec(), out)
}

fn check(name: &str, x: Tensor, f: impl Fn(&Var) -> Var) {
    let v = Var::param(x.clone());
    let out = f(&v);
    let g = grad(&out, &[v], false)[0].value();
    let num = numeric_grad(&x, &|t| no_grad(|| f(&Var::constant(t.clone())).item()));
    let scale = num.data().iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
    let err = g.max_abs_diff(&num) / scale;
    assert!(err < 1e-6, "{name}: relative error {err}\nanalytic {g:?}\nnumeric {num:?}");
}

#[test]
fn elementwise_ops_match_finite_differences() {
    let x = pseudo(&[2, 3], 1);
    let c = Var::constant(pseudo(&[2, 3], 2));
    check("mul", x.clone(), |v| sum_all(&mul(v, &c)));
    check("square", x.clone(), |v| sum_all(&square(v)));
    check("exp", x.clone(), |v| sum_all(&exp(v)));
    check("sub", x.clone(), |v| sum_all(&mul(&sub(&c, v), v)));
    check("sqrt", x.map(|v| v.abs() + 0.5), |v| sum_all(&sqrt(v)));
    check("recip", x.map(|v| v.abs() + 0.5), |v| sum_all(&recip_safe(v)));
    check("leaky", x.clone(), |v| sum_all(&mul(&leaky_relu(v, 0.2), &c)));
    check("selu", x.clone(), |v| sum_all(&mul(&selu(v), &c)));
    check("log_softmax", x.clone(), |v| sum_all(&mul(&log_softmax(v), &c)));
}

#[test]
fn reductions_and_layout_ops_match_finite_differences() {
    let x = pseudo(&[2, 3, 2, 2], 3);
    let c = Var::constant(pseudo(&[2, 5, 2, 2], 4));
    check("sum_inner", x.clone(), |v| sum_all(&square(&sum_inner(v, 2))));
    check("sum_channels", x.clone(), |v| sum_all(&square(&sum_channels(v))));
    check("concat", x.clone(), |v| {
        let other = Var::constant(pseudo(&[2, 2, 2, 2], 5));
        sum_all(&mul(&concat_channels(&[v.clone(), other]), &c))
    });
    check("slice", x.clone(), |v| sum_all(&square(&slice_channels(v, 1, 2))));
    check("reshape", x.clone(), |v| {
        let r = reshape(v, &[2, 12]);
        sum_all(&square(&matmul(&r, &r, false, true)))
    });
    let bias = pseudo(&[3], 6);
    let xc = Var::constant(x.clone());
    check("bias", bias, move |b| sum_all(&square(&add_bias(&xc, b))));
}

#[test]
fn matmul_all_transpose_modes() {
    let a = pseudo(&[3, 4], 7);
    for &(ta, tb) in &[(false, false), (true, false), (false, true), (true, true)] {
        let bshape = if tb { [5, if ta { 3 } else { 4 }] } else { [if ta { 3 } else { 4 }, 5] };
        let b = Var::constant(pseudo(&bshape, 8));
        check("matmul_a", a.clone(), |v| sum_all(&square(&matmul(v, &b, ta, tb))));
        let av = Var::constant(a.clone());
        check("matmul_b", b.value(), |v| sum_all(&square(&matmul(&av, v, ta, tb))));
    }
}

#[test]
fn conv_gradients_match_finite_differences() {
    for &(ci, co, k, groups) in &[(2, 3, 3, 1), (3, 3, 3, 3), (2, 4, 5, 2)] {
        let x = pseudo(&[2, ci, 4, 5], 9);
        let w = pseudo(&[co, ci / groups, k, k], 10);
        let wc = Var::constant(w.clone());
        let xc = Var::constant(x.clone());
        check("conv_x", x.clone(), |v| sum_all(&square(&conv2d(v, &wc, groups))));
        check("conv_w", w.clone(), |v| sum_all(&square(&conv2d(&xc, v, groups))));
    }
}

/// d/dw ‖∂f/∂x‖² through a conv–selu–linear stack: exercises every
/// second-order rule used by the critic's gradient penalty.
#[test]
fn gradient_of_input_gradient_norm_matches_finite_differences() {
    let x = pseudo(&[2, 2, 3, 3], 11);
    let w0 = pseudo(&[3, 2, 3, 3], 12);
    let dw = pseudo(&[3, 1, 3, 3], 13);
    let lin = pseudo(&[1, 27], 14);

    let penalty = |w: &Var, create: bool| -> Var {
        let xv = Var::param(x.clone());
        let h = selu(&conv2d(&xv, w, 1));
        let h = leaky_relu(&conv2d(&h, &Var::constant(dw.clone()), 3), 0.2);
        let h = selu(&concat_channels(&[slice_channels(&h, 0, 1), slice_channels(&h, 1, 2)]));
        let flat = reshape(&h, &[2, 27]);
        let score = matmul(&flat, &Var::constant(lin.clone()), false, true);
        let gx = grad(&sum_all(&score), &[xv], create)[0].clone();
        let norms = sqrt(&sum_inner(&reshape(&square(&gx), &[2, 18]), 1));
        sum_all(&square(&add_scalar(&norms, -1.0)))
    };

    let wv = Var::param(w0.clone());
    let analytic = grad(&penalty(&wv, true), std::slice::from_ref(&wv), false)[0].value();
    let numeric = numeric_grad(&w0, &|t| penalty(&Var::param(t.clone()), false).item());
    let scale = numeric.data().iter().fold(1e-8_f64, |m, v| m.max(v.abs()));
    let err = analytic.max_abs_diff(&numeric) / scale;
    assert!(err < 1e-5, "second-order relative error {err}");
}

#[test]
fn no_grad_records_nothing() {
    let w = Var::param(Tensor::ones(&[2]));
    let y = no_grad(|| mul(&w, &w));
    assert!(!y.requires_grad());
    assert!(grad_enabled());
}

#[test]
fn unreachable_inputs_get_zero_gradients() {
    let a = Var::param(Tensor::ones(&[3]));
    let b = Var::param(Tensor::ones(&[2]));
    let g = grad(&sum_all(&square(&a)), &[a.clone(), b], false);
    assert_eq!(g[0].value().data(), &[2.0, 2.0, 2.0]);
    assert_eq!(g[1].value().data(), &[0.0, 0.0]);
}

#[test]
fn sqrt_at_zero_has_zero_subgradient() {
    let a = Var::param(Tensor::zeros(&[2]));
    let g = grad(&sum_all(&sqrt(&a)), &[a], false);
    assert_eq!(g[0].value().data(), &[0.0, 0.0]);
}
