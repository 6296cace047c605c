use ballslep::SystemId;
use ballslep_cli::config::RegionConfig;
use ballslep_cli::{Overrides, RunConfig};
use proptest::prelude::*;

fn system() -> impl Strategy<Value = SystemId> {
    prop_oneof![Just(SystemId::I), Just(SystemId::II), Just(SystemId::III)]
}

proptest! {
    #[test]
    fn config_json_round_trips_with_stable_hash(
        sys in system(),
        m in 0usize..8,
        n in 1usize..16,
        a in 0.0f64..0.4,
        b in 0.5f64..1.0,
        theta in 1.0f64..180.0,
        threshold in 0.0f64..1.0,
    ) {
        let cfg = RunConfig {
            system: sys,
            max_radial: m,
            max_angular: n,
            region: RegionConfig { a, b, theta_deg: theta },
            threshold,
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn flags_override_file_values(m in 0usize..5, n in 1usize..9, theta in 5.0f64..175.0) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"M": 3, "N": 3, "region": {"a": 0.1, "theta_deg": 20}}"#).unwrap();
        let o = Overrides {
            config: Some(path),
            max_radial: Some(m),
            max_angular: Some(n),
            theta_deg: Some(theta),
            ..Overrides::default()
        };
        let cfg = o.resolve().unwrap();
        prop_assert_eq!((cfg.max_radial, cfg.max_angular, cfg.region.theta_deg), (m, n, theta));
        prop_assert_eq!(cfg.region.a, 0.1);
        prop_assert_eq!(cfg.region.b, 0.75);
    }
}
