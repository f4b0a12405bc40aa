use lie_langevin::cli::RunConfig;

const SCHEMA: &str = include_str!("../schema/csv_columns.json");

fn header_for(system: &str, parameters: &str) -> Vec<String> {
    let text = format!(
        r#"{{"system": "{system}", "parameters": {parameters},
            "noise": {{"sigma": 0.1, "theta": 0.01, "seed": 0, "dt": 0.1, "t_final": 0.1}}}}"#
    );
    let cfg = RunConfig::from_json(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    lie_langevin::cli::run_config(&cfg, dir.path()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    csv.lines().next().unwrap().split(',').map(str::to_string).collect()
}

fn expected(schema: &serde_json::Value, system: &str) -> Vec<String> {
    let s = &schema["trajectory_csv"]["systems"][system];
    let list = |k: &str| -> Vec<String> { serde_json::from_value(s[k].clone()).unwrap() };
    let mut out = vec!["t".to_string()];
    out.extend(list("state_labels"));
    out.push("h0".into());
    out.extend(list("casimir_labels").into_iter().map(|c| format!("C_{c}")));
    out.extend(list("momentum_labels").into_iter().map(|c| format!("J_{c}")));
    out
}

#[test]
fn schema_matches_written_headers() {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    let cases = [
        ("rigid_body", r#"{"inertia": [1, 2, 3], "initial": [1, 0, 0.5]}"#),
        ("heavy_top", r#"{"inertia": [1, 1, 0.5], "mgl": 1, "chi": [0, 0, 1], "initial": [0.3, 0.2, 1, 0.6, 0, 0.8]}"#),
        ("magnetic_particle", r#"{"mass": 1, "stiffness": 1, "field": [0, 0, 1], "initial": [1, 0, 0, 0, 0, 0]}"#),
    ];
    for (system, params) in cases {
        assert_eq!(header_for(system, params), expected(&schema, system), "{system}");
    }
    let vortex = header_for("point_vortex", r#"{"R": 1, "strengths": [1, 1], "initial_seed": 2}"#);
    assert_eq!(vortex, ["t", "x1", "y1", "z1", "x2", "y2", "z2", "h0", "J_M1", "J_M2", "J_M3"]);
}
