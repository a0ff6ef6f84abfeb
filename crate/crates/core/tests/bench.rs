use std::path::PathBuf;

use chimera_qubo::bench::{run_experiment, write_instance, ExperimentSpec, InstanceSource, Method};
use chimera_qubo::generators::{generate_on, topology_for, Family};
use chimera_qubo::solvers::{Budget, HeuristicParams};

fn heuristic(seed: u64) -> Method {
    Method::Heuristic(HeuristicParams { restarts: 2, budget: Budget::rounds(40), seed, ..HeuristicParams::default() })
}

#[test]
fn report_is_reproducible_without_timings() {
    let spec = ExperimentSpec {
        source: InstanceSource::Generate {
            family: Family::IsingZeroField,
            ks: vec![1, 2, 3],
            per_cell: 6,
            seed: 21,
            subset: None,
        },
        method: heuristic(4),
        reference: true,
        stop_at_reference: false,
    };
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a.to_csv(false), b.to_csv(false));
    assert_eq!(a.rows.len(), 3);
    assert!(a.records.iter().all(|r| r.gap().is_some_and(|g| g >= 0)));
    assert!(!a.to_csv(false).contains("seconds"));
    assert!(a.to_csv(true).lines().next().unwrap().contains("seconds"));
}

#[test]
fn files_source_matches_generated_source() {
    let dir = std::env::temp_dir().join(format!("chimera-qubo-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let topo = topology_for(2, None).unwrap();
    let mut files: Vec<PathBuf> = Vec::new();
    for i in 0..4 {
        let path = dir.join(format!("i{i}.txt"));
        write_instance(&path, &generate_on(Family::UniformPm1, topo.clone(), 50 + i).unwrap()).unwrap();
        files.push(path);
    }
    files.push(dir.join("missing.txt"));
    let method = Method::ChimeraDp { max_k: 4 };
    let from_files = run_experiment(&ExperimentSpec {
        source: InstanceSource::Files(files),
        method: method.clone(),
        reference: false,
        stop_at_reference: false,
    })
    .unwrap();
    let generated = run_experiment(&ExperimentSpec {
        source: InstanceSource::Generate { family: Family::UniformPm1, ks: vec![2], per_cell: 4, seed: 50, subset: None },
        method,
        reference: false,
        stop_at_reference: false,
    })
    .unwrap();
    let values = |r: &chimera_qubo::bench::Report| r.records.iter().filter_map(|x| x.value).collect::<Vec<_>>();
    assert_eq!(values(&from_files), values(&generated));
    // the missing file is reported, not fatal
    assert_eq!(from_files.records.iter().filter(|r| r.error.is_some()).count(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}
