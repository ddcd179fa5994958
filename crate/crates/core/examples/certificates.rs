//! Level-set certificates for the joint limits and the largest state
//! excursion each one allows around a steady reference.

use crane_erg::constraints::{joint_limit_constraints, JointBounds};
use crane_erg::config::Config;
use crane_erg::synthesis::{ellipsoid_support, level_set_matrix};
use nalgebra::Vector2;

fn main() -> crane_erg::Result<()> {
    let config = Config::bundled();
    let model = config.linear_model()?;
    let acl = model.closed_loop(&crane_erg::reference_gain());
    let v = Vector2::new(1.0, -0.5);

    for (i, c) in joint_limit_constraints(&JointBounds::default()).iter().enumerate() {
        let cert = level_set_matrix(&acl, &c.beta, i)?;
        let gamma = cert.threshold(&v, &c.beta, c.d);
        let support = ellipsoid_support(&v, &c.beta, gamma, cert.beta_pinv_beta());
        println!(
            "{:<22} lyap {:+.3e}  floor {:+.3e}  Γ(v) {:.4e}  max βᵀx {:.6} ≤ {:.6}",
            c.label,
            cert.lyap_residual_max_eig,
            cert.floor_margin_min_eig,
            gamma,
            support,
            c.d
        );
    }
    Ok(())
}
