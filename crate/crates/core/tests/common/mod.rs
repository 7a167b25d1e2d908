#![allow(dead_code)]

use netgame::model::{
    CovariateTable, ModelParams, NetworkState, NodeCovariates, Race, Sex, Statistic, StatisticSet,
};
use rand::Rng;

pub fn random_covariates<R: Rng>(n: usize, rng: &mut R) -> CovariateTable {
    let races = [Race::White, Race::Black, Race::Hispanic, Race::Asian, Race::Other];
    let nodes = (0..n)
        .map(|_| NodeCovariates {
            sex: if rng.random_bool(0.5) { Sex::Male } else { Sex::Female },
            grade: rng.random_range(7..=12),
            race: races[rng.random_range(0..races.len())],
            hh_smokes: rng.random_bool(0.3),
            mom_edu: rng.random_bool(0.5),
            price: rng.random_range(50.0..300.0),
            school_id: 0,
        })
        .collect();
    CovariateTable::new(nodes).unwrap()
}

pub fn random_state<R: Rng>(n: usize, rng: &mut R) -> NetworkState {
    let mut s = NetworkState::empty(n).unwrap();
    for i in 0..n {
        s.set_action(i, rng.random_bool(0.5));
        for j in 0..n {
            if i != j {
                s.set_link(i, j, rng.random_bool(0.4));
            }
        }
    }
    s
}

/// Every statistic in the catalogue with coefficients uniform on `[-scale, scale]`.
pub fn random_full_params<R: Rng>(scale: f64, rng: &mut R) -> ModelParams {
    let set = StatisticSet::new(Statistic::catalogue()).unwrap();
    let theta = (0..set.len()).map(|_| rng.random_range(-scale..scale)).collect();
    ModelParams::new(set, theta).unwrap()
}

/// A compact model without covariates: actions, externalities, links, reciprocity, triangles.
pub fn random_structural_params<R: Rng>(scale: f64, rng: &mut R) -> ModelParams {
    use netgame::model::{NodeCovariate, PairCovariate};
    let set = StatisticSet::new(vec![
        Statistic::ActionBaseline(NodeCovariate::Constant),
        Statistic::AggregateExternality { per_capita: false },
        Statistic::LocalExternality,
        Statistic::LinkBaseline(PairCovariate::Constant),
        Statistic::Reciprocity,
        Statistic::DegreeSquared,
        Statistic::CyclicTriangle,
        Statistic::SymmetricTriangle,
    ])
    .unwrap();
    let theta = (0..set.len()).map(|_| rng.random_range(-scale..scale)).collect();
    ModelParams::new(set, theta).unwrap()
}
