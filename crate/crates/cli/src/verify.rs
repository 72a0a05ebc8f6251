//! Exact and quadrature identity suites.

use heightfrag::csbp::{conditioned_entrance_laplace, conditioned_entrance_laplace_quadrature, u_r_lambda};
use heightfrag::measure::{phi0_quadrature, phi_closed, phi_levy_integral, tagged_moment, tagged_moment_from_phi};
use heightfrag::partition::{enumerate_set_partitions, kappa_minus, p_theta, rho_minus};
use heightfrag::special::ln_gamma;
use heightfrag::Alpha;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Record, Report};

const PHI_R: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

fn alpha_records(cfg: &RunConfig, a: f64) -> Result<Vec<Record>, CliError> {
    let al = Alpha::new(a)?;
    let tol = |name: &str| cfg.tolerance(name);
    let mut out = Vec::new();

    for r in PHI_R {
        let closed = phi_closed(r, al);
        out.push(Record::compare(
            "phi_levy_integral",
            a,
            format!("r={r}"),
            phi_levy_integral(r, al)?,
            closed,
            tol("phi_levy_integral"),
        ));
        out.push(Record::compare(
            "phi_zero_density",
            a,
            format!("r={r}"),
            phi0_quadrature(r, al)?,
            closed,
            tol("phi_zero_density"),
        ));
    }

    for k in 1..=6 {
        out.push(Record::compare(
            "moment_chain",
            a,
            format!("k={k}"),
            tagged_moment_from_phi(k, al),
            tagged_moment(k, al),
            tol("moment_chain"),
        ));
    }

    for n in 2..=7usize {
        let parts: Vec<_> = enumerate_set_partitions(n)?.into_iter().filter(|p| !p.is_trivial()).collect();
        let mut sum = 0.0;
        // κ₋ⁿ = α Γ(n-1/α)/Γ(n-1) ρ₋(n); keep the worst partition
        let mut worst = (0.0, 1.0, -1.0);
        let scale = a * (ln_gamma(n as f64 - 1.0 / a) - ln_gamma(n as f64 - 1.0)).exp();
        for pi in &parts {
            let rho = rho_minus(pi, al)?;
            sum += rho;
            let kappa = kappa_minus(pi, al)?;
            let e = ((kappa - scale * rho) / (scale * rho)).abs();
            if e > worst.2 {
                worst = (kappa, scale * rho, e);
            }
        }
        out.push(Record::compare("rho_sum", a, format!("n={n}"), sum, 1.0, tol("rho_sum")));
        out.push(Record::compare(
            "kappa_rho",
            a,
            format!("n={n}, worst partition"),
            worst.0,
            worst.1,
            tol("kappa_rho"),
        ));
        if n <= 5 {
            let mut worst = (0.0, 1.0, -1.0);
            for pi in &parts {
                let kappa = kappa_minus(pi, al)?;
                let ext = pi.extensions().iter().map(|e| kappa_minus(e, al)).sum::<heightfrag::Result<f64>>()?;
                let e = ((ext - kappa) / kappa).abs();
                if e > worst.2 {
                    worst = (ext, kappa, e);
                }
            }
            out.push(Record::compare(
                "kappa_restriction",
                a,
                format!("n={n}, worst partition"),
                worst.0,
                worst.1,
                tol("kappa_restriction"),
            ));
        }
    }

    for theta in [-0.5, 0.0, 1.0, 5.0] {
        for n in [2usize, 4, 6, 8] {
            let s = enumerate_set_partitions(n)?
                .iter()
                .map(|p| p_theta(&p.block_sizes(), theta, al))
                .sum::<heightfrag::Result<f64>>()?;
            out.push(Record::compare("eppf_sum", a, format!("theta={theta}, n={n}"), s, 1.0, tol("eppf_sum")));
        }
    }

    for (r, s) in [(0.5, 0.5), (0.5, 2.0), (2.0, 0.5), (2.0, 2.0)] {
        for l in [0.1, 1.0, 10.0] {
            out.push(Record::compare(
                "u_flow",
                a,
                format!("r={r}, s={s}, lambda={l}"),
                u_r_lambda(r, u_r_lambda(s, l, al), al),
                u_r_lambda(r + s, l, al),
                tol("u_flow"),
            ));
        }
    }

    for r in [0.1, 1.0, 3.0] {
        for l in [0.1, 1.0, 5.0] {
            out.push(Record::compare(
                "entrance_quadrature",
                a,
                format!("r={r}, lambda={l}"),
                conditioned_entrance_laplace_quadrature(r, l, al)?,
                conditioned_entrance_laplace(r, l, al),
                tol("entrance_quadrature"),
            ));
        }
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &a in &cfg.alpha_grid {
        records.extend(alpha_records(cfg, a)?);
    }
    Ok(Report::new("verify", cfg, records))
}
