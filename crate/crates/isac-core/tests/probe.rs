// temporary probe
#[test]
fn probe_histories() {
    use isac_core::alternation::{optimize_joint, AlternationOptions};
    use isac_core::channel::realize_channels;
    use isac_core::rng::{standalone_stream, Purpose};
    use isac_core::scenario::ScenarioConfig;
    use isac_core::surface::random_config;
    for seed in 40..46u64 {
        let cfg = ScenarioConfig { xi_db: 0.0, ..ScenarioConfig::default_small() };
        let mut rng = standalone_stream(seed, 0, Purpose::Oracle);
        let channels = realize_channels(&cfg, &mut rng).unwrap();
        let mut rng2 = standalone_stream(seed, 1, Purpose::Oracle);
        let surface = random_config(cfg.q, cfg.alpha_max, true, &mut rng2).unwrap();
        let out = optimize_joint(&channels.at(0), &surface, &cfg.noise(), cfg.xi(), cfg.p_bs, &AlternationOptions::default()).unwrap();
        println!("seed {seed}: rounds={} conv={} history={:?}", out.rounds, out.converged, out.history);
    }
}
