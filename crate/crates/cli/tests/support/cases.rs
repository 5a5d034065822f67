//! Golden report cases: file name and CLI arguments, run from the
//! workspace root.

pub const CASES: &[(&str, &[&str])] = &[
    ("gkdv_validate.json", &["validate", "--config", "configs/gkdv.json"]),
    ("gkdv_wave.json", &["wave", "--config", "configs/gkdv.json", "--mu", "-0.5", "--c", "1"]),
    ("gkdv_whitham.json", &["whitham", "--config", "configs/gkdv.json"]),
    ("gkdv_limit_harmonic.json", &["limit_harmonic", "--config", "configs/gkdv.json"]),
    ("gkdv_limit_soliton.json", &["limit_soliton", "--config", "configs/gkdv.json"]),
    ("gkdv_mi.json", &["mi", "--config", "configs/gkdv.json"]),
    ("gkdv_toy.json", &["toy", "--config", "configs/gkdv.json"]),
    ("gkdv_sweep.json", &["sweep", "--config", "configs/gkdv.json"]),
    ("gkdv_sweep.csv", &["sweep", "--config", "configs/gkdv.json", "--format", "csv"]),
    ("quartic_wave.json", &["wave", "--config", "configs/quartic.json"]),
    ("quartic_mi.json", &["mi", "--config", "configs/quartic.json"]),
    ("quartic_limit_harmonic.json", &["limit_harmonic", "--config", "configs/quartic.json"]),
    ("ek_whitham.json", &["whitham", "--config", "configs/euler_korteweg.json"]),
    ("ek_mi.json", &["mi", "--config", "configs/euler_korteweg.json"]),
    ("ek_conjugation.json", &["conjugation", "--config", "configs/euler_korteweg.json"]),
    ("ek_limit_harmonic.json", &["limit_harmonic", "--config", "configs/euler_korteweg.json"]),
    ("nls_mi.json", &["mi", "--config", "configs/nls_hydro.json"]),
];
