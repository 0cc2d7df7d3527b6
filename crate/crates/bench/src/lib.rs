//! Fixtures shared by the benchmarks.

use trimlevy::{LevyModel, LimitLawSpec};

/// Two-sided stable, tempered and atomic models with moderate indices.
pub fn models() -> Vec<(&'static str, LevyModel)> {
    vec![
        ("stable_1.5", LevyModel::stable_with_balance(1.5, 0.7).expect("valid model")),
        ("tempered_0.5", LevyModel::tempered_stable(0.5, 1.0).expect("valid model")),
        ("atomic_0.8", LevyModel::atomic_stable(0.8, &[(1.0, 0.5)]).expect("valid model")),
    ]
}

pub fn limit_law(n: usize) -> LimitLawSpec {
    LimitLawSpec::new(1.5, 0.7, 1, n).expect("valid law")
}
