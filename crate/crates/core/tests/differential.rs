use dxsim_core::engine::{run, RunOptions, SimConfig};
use dxsim_core::oracle::{compare_results, oracle_run};
use dxsim_core::workloads::{random_program, RandomSpec};

fn config(spec: &RandomSpec) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.maa.tile_size = spec.tile_size;
    cfg
}

#[test]
fn random_programs_match_the_interpreter() {
    let spec = RandomSpec::default();
    let cfg = config(&spec);
    for seed in 0..300 {
        let (p, img) = random_program(seed, &spec);
        let want = oracle_run(&p, img.clone(), &cfg.maa).unwrap();
        let got = run(&p, img, &cfg, &RunOptions::default())
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        if let Some(d) = compare_results(&got.image, &got.tiles, &want.image, &want.tiles) {
            panic!("seed {seed}: {d}\n{p:#?}");
        }
        assert_eq!(got.registers, want.registers, "seed {seed}");
    }
}
