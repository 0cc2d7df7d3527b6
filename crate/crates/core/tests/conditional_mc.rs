//! Conditional characteristic functions against unconditional simulation.

use num_complex::Complex64;
use trimlevy::conditional::{conditional_cf_ratio, conditional_cf_trimmed, ConditionSpec, KernelForm, RatioForm};
use trimlevy::limit_laws::{psi, LimitLawSpec};
use trimlevy::measures::LevyModel;
use trimlevy::montecarlo::{complex_mean_se, replicate};
use trimlevy::samplers::sample_trimmed;

fn tower(model: &LevyModel, t: f64, r: usize, theta: f64, outer: usize, inner: usize) {
    // E[ E(e^{iθ ^{(r)}X} | top r jumps) ] against the empirical CF of ^{(r)}X
    let cond = replicate(outer, 21, 1, |rng| {
        let s = sample_trimmed(model, t, r, 0, rng)?;
        let spec = ConditionSpec::new(model, t, 1, &s.ordered.jumps)?;
        let seed = rng.derive(7).stream_id();
        Ok(conditional_cf_trimmed(model, &spec, theta, KernelForm::Auto, inner, seed)?.value())
    })
    .unwrap();
    let direct = replicate(100_000, 22, 1, |rng| {
        let s = sample_trimmed(model, t, r, 0, rng)?;
        Ok(Complex64::new(0.0, theta * s.trimmed_value).exp())
    })
    .unwrap();
    let (a, sa) = complex_mean_se(&cond);
    let (b, sb) = complex_mean_se(&direct);
    let se = (sa * sa + sb * sb).sqrt();
    assert!((a - b).norm() <= 3.0 * se, "{a} vs {b} (se {se})");
}

#[test]
fn tower_property_continuous() {
    tower(&LevyModel::stable_with_balance(1.3, 0.7).unwrap(), 0.5, 2, 0.8, 4000, 1);
}

#[test]
fn tower_property_with_atoms() {
    let model = LevyModel::atomic_stable(0.8, &[(0.5, 0.4), (1.0, 0.6)]).unwrap();
    tower(&model, 1.0, 2, 1.1, 4000, 64);
}

#[test]
fn continuous_model_forgets_earlier_levels() {
    let model = LevyModel::tempered_stable(0.6, 1.0).unwrap();
    let a = ConditionSpec::new(&model, 0.4, 1, &[3.0, 0.9, 0.2]).unwrap();
    let b = ConditionSpec::new(&model, 0.4, 1, &[0.5, 0.3, 0.2]).unwrap();
    for &th in &[0.0, 0.7, 4.0] {
        let va = conditional_cf_trimmed(&model, &a, th, KernelForm::Auto, 10, 1).unwrap();
        let vb = conditional_cf_trimmed(&model, &b, th, KernelForm::Auto, 10, 1).unwrap();
        assert_eq!(va, vb);
        assert!(va.value().norm() <= 1.0 + 1e-12);
    }
}

#[test]
fn ratio_on_pure_stable_is_the_limit_exponent() {
    // levels y = x v^{-1/α} t^{1/α} make t∫f(z/y)Π(dz) = v x^{-α} ψ exactly
    let (alpha, x, v) = (1.4f64, 1.7, 0.8f64);
    let model = LevyModel::pure_stable(alpha).unwrap();
    let law = LimitLawSpec::new(alpha, 1.0, 1, 1).unwrap();
    for &t in &[1.0f64, 1e-2, 1e-4] {
        let y = x * v.powf(-1.0 / alpha) * t.powf(1.0 / alpha);
        let spec = ConditionSpec::new(&model, t, 1, &[y]).unwrap();
        for &th in &[0.3, 2.0] {
            let got = conditional_cf_ratio(&model, &spec, th, 1, 0, RatioForm::Centered, 10, 1).unwrap().value();
            let want = (psi(&law, th).unwrap() * (v * x.powf(-alpha))).exp();
            assert!((got - want).norm() < 1e-10, "t={t} θ={th}: {got} vs {want}");
        }
    }
}

#[test]
fn subordinator_ratio_forms() {
    let model = LevyModel::pure_stable(0.5).unwrap().with_drift(0.0).unwrap();
    let spec = ConditionSpec::new(&model, 1.0, 1, &[2.0, 1.1, 0.4]).unwrap();
    assert!(conditional_cf_ratio(&model, &spec, 0.0, 1, 2, RatioForm::Subordinator, 10, 1).unwrap().value() == Complex64::new(1.0, 0.0));
    let v = conditional_cf_ratio(&model, &spec, 0.9, 1, 2, RatioForm::Subordinator, 10, 1).unwrap().value();
    assert!(v.norm() <= 1.0);
    assert!(conditional_cf_ratio(&model, &spec, 0.9, 2, 2, RatioForm::Subordinator, 10, 1).is_err());
    let two_sided = LevyModel::stable_with_balance(1.2, 0.5).unwrap();
    let spec = ConditionSpec::new(&two_sided, 1.0, 1, &[1.0]).unwrap();
    assert!(conditional_cf_ratio(&two_sided, &spec, 0.9, 1, 0, RatioForm::Subordinator, 10, 1).is_err());
}

#[test]
fn binned_simulation_approaches_the_conditional_cf() {
    // condition ΔX^{(1)} on shrinking bins around y and compare the ratio CF
    let (alpha, y, theta) = (0.7, 1.0, 1.5);
    let model = LevyModel::pure_stable(alpha).unwrap();
    let draws = replicate(400_000, 23, 1, |rng| {
        let s = sample_trimmed(&model, 1.0, 1, 0, rng)?;
        let d = s.ordered.jumps[0];
        Ok((d, (s.trimmed_value - model.centering_rho(d)?) / d))
    })
    .unwrap();
    let spec = ConditionSpec::new(&model, 1.0, 1, &[y]).unwrap();
    let exact = conditional_cf_ratio(&model, &spec, theta, 1, 0, RatioForm::Centered, 10, 1).unwrap().value();
    let mut errors = Vec::new();
    for &h in &[0.5, 0.1, 0.02] {
        let z: Vec<Complex64> = draws
            .iter()
            .filter(|(d, _)| (d - y).abs() <= h * y)
            .map(|(_, q)| Complex64::new(0.0, theta * q).exp())
            .collect();
        let (m, se) = complex_mean_se(&z);
        errors.push(((m - exact).norm(), se));
    }
    eprintln!("bin errors (error, se): {errors:?}");
    let (last, se) = errors[errors.len() - 1];
    assert!(last <= 3.0 * se, "narrowest bin error {last} vs se {se}");
}
