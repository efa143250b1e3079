//! Scenarios shipped with the binary.

use super::config::ScenarioConfig;

pub const BUILTIN_NAMES: [&str; 8] = [
    "fig2-gamma-0.001",
    "fig2-gamma-0.01",
    "fig2-gamma-0.1",
    "fig3-gamma-0.001",
    "fig3-gamma-0.01",
    "fig3-gamma-0.1",
    "ideal-gamma-0",
    "rwa-check",
];

/// One-line description of a built-in scenario.
pub fn builtin_description(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2-gamma-0.001" | "fig2-gamma-0.01" | "fig2-gamma-0.1" => {
            "mean quanta of mode a, Γ = 10λ, n_th = 0.5, n_init = 2, r = 1"
        }
        "fig3-gamma-0.001" | "fig3-gamma-0.01" | "fig3-gamma-0.1" => {
            "Duan total variance, Γ = 10λ, n_th = 0.5, n_init = 2, r = 1"
        }
        "ideal-gamma-0" => "no motional decay, Γ = 10λ, n_init = 2, r = 1",
        "rwa-check" => "sideband model against the full model at ν/|λ| = 5, 30, 300 on a 5×5 truncation",
        _ => return None,
    })
}

fn figure(name: &str, gamma: &str, series: &str) -> String {
    format!(
        r#"name = "{name}"

[system]
gamma_1_per_lambda = 10.0
gamma_2_per_lambda = 10.0
gamma_a_per_lambda = {gamma}
gamma_b_per_lambda = {gamma}
n_th = 0.5
n_init = 2.0

[squeeze]
r = 1.0
phi_rad = 0.0
coupling_per_lambda = 1.0

[space]
dim_a = 18
dim_b = 18

[evolve]
t_final_inverse_lambda = 100.0
samples = 200

[output]
plot = true
plot_series = [{series}]
"#
    )
}

const RWA_CHECK: &str = r#"name = "rwa-check"

[system]
gamma_1_per_lambda = 10.0
gamma_2_per_lambda = 10.0
gamma_a_per_lambda = 0.001
gamma_b_per_lambda = 0.001
n_th = 0.5
n_init = 0.5

[squeeze]
r = 1.0

[space]
dim_a = 5
dim_b = 5

[evolve]
t_final_inverse_lambda = 10.0
samples = 20

[full_model]
trap_nu_x_per_lambda = 300.0
trap_nu_y_per_lambda = 300.0
lamb_dicke = 0.1

[rwa]
ratios = [5.0, 30.0, 300.0]
bound = 0.05
"#;

/// TOML text of a built-in scenario.
pub fn builtin_toml(name: &str) -> Option<String> {
    let gamma = name.rsplit('-').next()?;
    Some(match name {
        "fig2-gamma-0.001" | "fig2-gamma-0.01" | "fig2-gamma-0.1" => figure(name, gamma, r#""mean_quanta_a""#),
        "fig3-gamma-0.001" | "fig3-gamma-0.01" | "fig3-gamma-0.1" => figure(name, gamma, r#""duan_variance""#),
        "ideal-gamma-0" => figure(name, "0.0", r#""mean_quanta_a", "duan_variance", "tmvs_fidelity""#),
        "rwa-check" => RWA_CHECK.to_string(),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    builtin_toml(name).map(|t| ScenarioConfig::from_toml_str(&t).expect("built-in scenarios parse"))
}
