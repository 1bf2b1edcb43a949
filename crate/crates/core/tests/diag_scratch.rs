//! Temporary diagnostic (deleted before release).

use pvf_core::experiments::synthetic::{prepare_rep, rep_seed, SweepConfig};
use pvf_core::metrics::MetricSpec;
use pvf_core::perturb::PerturbationConfig;
use pvf_core::select::{
    perturbed_counts, select_from_counts, validation_counts, Aggregator,
};

#[test]
#[ignore]
fn inspect_selection_dynamics() {
    let cfg = SweepConfig::default();
    let mut trad_ties = 0;
    let mut trad_chose_0_in_tie = 0;
    let mut pvf_ties = 0;
    let mut reps_with_true_in_trad_max = 0;
    let n_reps = 60;
    for rep in 0..n_reps {
        let seed = rep_seed(17, 50, 2.5, rep);
        let prepared = prepare_rep(50, 2.5, seed).unwrap();
        let metric = MetricSpec::F1;
        let perturbation = PerturbationConfig::all_features(
            5,
            0.1,
            0.0,
            0.0,
            cfg.replicas,
            cfg.m_sets,
            pvf_core::seeding::derive(seed, &[3]),
        );
        let matrix = perturbed_counts(&prepared.pool, &prepared.val, &perturbation).unwrap();
        let vcounts: Vec<_> = validation_counts(&prepared.pool, &prepared.val)
            .unwrap()
            .into_iter()
            .map(|c| vec![c])
            .collect();
        let pvf = select_from_counts(&matrix, &metric, &cfg.aggregator).unwrap();
        let trad = select_from_counts(&vcounts, &metric, &Aggregator::Mean).unwrap();
        let max_trad = trad.aggregated.iter().cloned().fold(f64::MIN, f64::max);
        let n_at_max = trad
            .aggregated
            .iter()
            .filter(|&&v| (max_trad - v).abs() < 1e-12)
            .count();
        if n_at_max > 1 {
            trad_ties += 1;
            if trad.chosen == 0 {
                trad_chose_0_in_tie += 1;
            }
        }
        if (trad.aggregated[0] - max_trad).abs() < 1e-12 {
            reps_with_true_in_trad_max += 1;
        }
        if pvf.tie {
            pvf_ties += 1;
        }
        if rep < 6 {
            println!("rep {rep}: trad agg {:?}", trad.aggregated);
            println!(
                "        pvf  agg {:?} | trad chose {} pvf chose {}",
                pvf.aggregated, trad.chosen, pvf.chosen
            );
        }
    }
    println!(
        "trad ties: {trad_ties}/{n_reps} (chose idx0 in {trad_chose_0_in_tie}), pvf ties: {pvf_ties}, true pair at trad max: {reps_with_true_in_trad_max}"
    );
}
