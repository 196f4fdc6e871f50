//! Exact linearization blocks for products of a two-valued variable with a
//! bounded continuous quantity, and the reverse-norm epigraph builders that
//! use them.

use crate::milp::Sense;
use crate::model::{propagate_bounds, AffineMap};

use super::{citations, LinExpr, ProgramBuilder, ReformError};

/// Bounds `(lambda_lo, lambda_hi, gamma_lo, gamma_hi)` of a bilinear block:
/// lambda two-valued in `{lambda_lo, lambda_hi}`, gamma boxed.
#[derive(Debug, Clone, Copy)]
pub struct McBounds {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

impl McBounds {
    pub fn binary(gamma_lo: f64, gamma_hi: f64) -> Self {
        McBounds { lambda_lo: 0.0, lambda_hi: 1.0, gamma_lo, gamma_hi }
    }

    pub fn sign(gamma_lo: f64, gamma_hi: f64) -> Self {
        McBounds { lambda_lo: -1.0, lambda_hi: 1.0, gamma_lo, gamma_hi }
    }
}

/// Emit the four-inequality envelope tying `s`, `lambda` and `gamma`
/// together. When `lambda` is restricted to its two endpoint values the
/// block is exact: `s = lambda * gamma`.
///
/// All three quantities may be arbitrary linear expressions; restricting
/// `lambda` to two values is the caller's job (typically `lambda = lo +
/// (hi - lo) * z` for a binary `z`).
pub fn build_mccormick(
    builder: &mut ProgramBuilder,
    citation: &str,
    tag: &str,
    s: &LinExpr,
    lambda: &LinExpr,
    gamma: &LinExpr,
    bounds: McBounds,
) -> Result<(), ReformError> {
    let McBounds { lambda_lo: ll, lambda_hi: lu, gamma_lo: gl, gamma_hi: gu } = bounds;
    if gl > gu {
        return Err(ReformError::DegenerateBounds { gamma_lo: gl, gamma_hi: gu });
    }
    if !(ll < lu) {
        return Err(ReformError::InvalidProblem(format!(
            "two-valued variable needs lambda_lo < lambda_hi, got [{ll}, {lu}]"
        )));
    }
    // s >= ll*gamma + gl*lambda - ll*gl
    let r1 = gamma.scaled(ll).add(&lambda.scaled(gl)).add(&s.scaled(-1.0));
    builder.add_row(citation, format!("mc{tag}_a"), r1, Sense::Le, ll * gl);
    // s >= lu*gamma + gu*lambda - lu*gu
    let r2 = gamma.scaled(lu).add(&lambda.scaled(gu)).add(&s.scaled(-1.0));
    builder.add_row(citation, format!("mc{tag}_b"), r2, Sense::Le, lu * gu);
    // s <= lu*gamma + gl*lambda - lu*gl
    let r3 = s.clone().add(&gamma.scaled(-lu)).add(&lambda.scaled(-gl));
    builder.add_row(citation, format!("mc{tag}_c"), r3, Sense::Le, -lu * gl);
    // s <= ll*gamma + gu*lambda - ll*gu
    let r4 = s.clone().add(&gamma.scaled(-ll)).add(&lambda.scaled(-gu));
    builder.add_row(citation, format!("mc{tag}_d"), r4, Sense::Le, -ll * gu);
    Ok(())
}

/// Sign product block: fresh variables `(s, z)` with `s = (2z - 1) * gamma`
/// exactly, `z` binary. Returns the `s` variable id.
pub fn sign_product(
    builder: &mut ProgramBuilder,
    citation: &str,
    tag: &str,
    gamma: &LinExpr,
    gamma_lo: f64,
    gamma_hi: f64,
) -> Result<usize, ReformError> {
    let mag = gamma_lo.abs().max(gamma_hi.abs());
    let s = builder.add_var(format!("s{tag}"), -mag, mag, 0.0, false);
    let z = builder.add_var(format!("z{tag}"), 0.0, 1.0, 0.0, true);
    let lambda = LinExpr::term(z, 2.0).add(&LinExpr::constant(-1.0));
    build_mccormick(
        builder,
        citation,
        tag,
        &LinExpr::var(s),
        &lambda,
        gamma,
        McBounds::sign(gamma_lo, gamma_hi),
    )?;
    Ok(s)
}

/// Binary product block: fresh variable `s` with `s = z * gamma` exactly for
/// an existing binary `z`. Returns the `s` variable id.
pub fn binary_product(
    builder: &mut ProgramBuilder,
    citation: &str,
    tag: &str,
    z: usize,
    gamma: &LinExpr,
    gamma_lo: f64,
    gamma_hi: f64,
) -> Result<usize, ReformError> {
    let s = builder.add_var(
        format!("s{tag}"),
        gamma_lo.min(0.0),
        gamma_hi.max(0.0),
        0.0,
        false,
    );
    build_mccormick(
        builder,
        citation,
        tag,
        &LinExpr::var(s),
        &LinExpr::var(z),
        gamma,
        McBounds::binary(gamma_lo, gamma_hi),
    )?;
    Ok(s)
}

/// Block for `{(x, t) : -||map(x)||_p <= t}` over an existing decision box.
///
/// * `p = 1`: one sign product per coordinate and a single covering row
///   `sum_i s_i + t >= 0`; exact because the sign choice can always recover
///   the full norm.
/// * `p = inf`: a 2m-way disjunction selecting which signed coordinate
///   attains the maximum, bound by big-M constants derived from the box
///   image (each recorded in the ledger).
///
/// Returns the `t` variable id.
pub fn build_reverse_norm_epigraph(
    builder: &mut ProgramBuilder,
    p_one: bool,
    map: &AffineMap,
    x_vars: &[usize],
    box_lower: &[f64],
    box_upper: &[f64],
    tag: &str,
) -> Result<usize, ReformError> {
    let (lhat, uhat) = propagate_bounds(map, box_lower, box_upper);
    let m = map.out_dim();
    let t_floor = -(0..m).map(|i| lhat[i].abs().max(uhat[i].abs())).fold(0.0f64, f64::max);
    let t = builder.add_var(format!("t{tag}"), t_floor, f64::INFINITY, 0.0, false);

    if p_one {
        let mut cover = LinExpr::var(t);
        for i in 0..m {
            let (row, off) = map.row(i);
            let gamma = LinExpr::affine(x_vars, row, off);
            let s = sign_product(
                builder,
                citations::DEF_2_3,
                &format!("{tag}_{i}"),
                &gamma,
                lhat[i],
                uhat[i],
            )?;
            cover = cover.push(s, 1.0);
        }
        builder.add_row(citations::LEMMA_2_2, format!("rn{tag}"), cover.scaled(-1.0), Sense::Le, 0.0);
        return Ok(t);
    }

    // Sup-norm: pick the attaining signed coordinate.
    let mut pick = LinExpr::constant(0.0);
    for i in 0..m {
        let (row, off) = map.row(i);
        for (sig_idx, sign) in [(0usize, 1.0f64), (1, -1.0)] {
            let u = builder.add_var(format!("u{tag}_{i}_{sig_idx}"), 0.0, 1.0, 0.0, true);
            pick = pick.push(u, 1.0);
            // sign * map_i(x) + t >= -M * (1 - u)
            let reach = if sign > 0.0 { lhat[i] } else { -uhat[i] };
            let big_m = (-t_floor - reach).max(0.0) + 1.0;
            builder.record_big_m(
                format!("M{tag}_{i}_{sig_idx}"),
                big_m,
                "max(0, max_j |image_j| - signed coordinate floor) + 1".to_string(),
                citations::LEMMA_2_2,
            );
            let expr = LinExpr::affine(x_vars, row, off)
                .scaled(sign)
                .push(t, 1.0)
                .push(u, -big_m);
            builder.add_row(
                citations::LEMMA_2_2,
                format!("rn{tag}_{i}_{sig_idx}"),
                expr.scaled(-1.0),
                Sense::Le,
                big_m,
            );
        }
    }
    builder.add_row(citations::LEMMA_2_2, format!("rnpick{tag}"), pick, Sense::Eq, 1.0);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_milp, SolverConfig};

    /// Fix lambda to one of its two values and check that the four rows pin
    /// s to the product.
    fn forced_value(ll: f64, lu: f64, gl: f64, gu: f64, lam: f64, gam: f64) -> f64 {
        let mut b = ProgramBuilder::new("mc");
        let s = b.add_var("s", f64::NEG_INFINITY, f64::INFINITY, 1.0, false);
        let lam_v = b.add_var("lam", lam, lam, 0.0, false);
        let gam_v = b.add_var("gam", gam, gam, 0.0, false);
        build_mccormick(
            &mut b,
            citations::DEF_2_3,
            "t",
            &LinExpr::var(s),
            &LinExpr::var(lam_v),
            &LinExpr::var(gam_v),
            McBounds { lambda_lo: ll, lambda_hi: lu, gamma_lo: gl, gamma_hi: gu },
        )
        .unwrap();
        let member = b.finish("mc");
        let sol = solve_milp(&member.program, &SolverConfig::default()).unwrap();
        // Minimizing s: the envelope pins it anyway, so the optimum is the
        // product itself.
        sol.x[s]
    }

    #[test]
    fn binary_block_is_exact() {
        assert!((forced_value(0.0, 1.0, -2.0, 3.0, 1.0, 2.0) - 2.0).abs() < 1e-9);
        assert!((forced_value(0.0, 1.0, -2.0, 3.0, 0.0, -1.0) - 0.0).abs() < 1e-9);
    }

    #[test]
    fn sign_block_is_exact() {
        assert!((forced_value(-1.0, 1.0, 0.0, 5.0, -1.0, 4.0) + 4.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_gamma_bounds_rejected() {
        let mut b = ProgramBuilder::new("mc");
        let s = b.add_var("s", 0.0, 1.0, 0.0, false);
        let err = build_mccormick(
            &mut b,
            citations::DEF_2_3,
            "t",
            &LinExpr::var(s),
            &LinExpr::var(s),
            &LinExpr::var(s),
            McBounds { lambda_lo: 0.0, lambda_hi: 1.0, gamma_lo: 2.0, gamma_hi: 1.0 },
        )
        .unwrap_err();
        assert!(matches!(err, ReformError::DegenerateBounds { .. }));
    }

    #[test]
    fn reverse_norm_l1_identity() {
        // min t with -|x| <= t over x in [-1, 1], x fixed at 0.5 -> -0.5.
        let mut b = ProgramBuilder::new("rn");
        let x = b.add_var("x", 0.5, 0.5, 0.0, false);
        let map = AffineMap::identity(1);
        let t = build_reverse_norm_epigraph(&mut b, true, &map, &[x], &[-1.0], &[1.0], "0").unwrap();
        b.lp.objective[t] = 1.0;
        let member = b.finish("rn");
        let sol = solve_milp(&member.program, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 0.5).abs() < 1e-8, "obj {}", sol.objective);
    }

    #[test]
    fn reverse_norm_sup_two_dims() {
        // x = (0.3, -0.8): minimal t is -0.8.
        let mut b = ProgramBuilder::new("rn");
        let x0 = b.add_var("x0", 0.3, 0.3, 0.0, false);
        let x1 = b.add_var("x1", -0.8, -0.8, 0.0, false);
        let map = AffineMap::identity(2);
        let t = build_reverse_norm_epigraph(
            &mut b,
            false,
            &map,
            &[x0, x1],
            &[-1.0, -1.0],
            &[1.0, 1.0],
            "0",
        )
        .unwrap();
        b.lp.objective[t] = 1.0;
        let member = b.finish("rn");
        assert!(!member.ledger.entries.is_empty());
        let sol = solve_milp(&member.program, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 0.8).abs() < 1e-8, "obj {}", sol.objective);
    }

    #[test]
    fn reverse_norm_l1_over_sum_map() {
        // map(x) = x1 + x2 over [0,1]^2: min of -|x1 + x2| is -2 at (1,1).
        let mut b = ProgramBuilder::new("rn");
        let x0 = b.add_var("x0", 0.0, 1.0, 0.0, false);
        let x1 = b.add_var("x1", 0.0, 1.0, 0.0, false);
        let map = AffineMap { matrix: vec![vec![1.0, 1.0]], offset: vec![0.0] };
        let t = build_reverse_norm_epigraph(&mut b, true, &map, &[x0, x1], &[0.0, 0.0], &[1.0, 1.0], "0")
            .unwrap();
        b.lp.objective[t] = 1.0;
        let member = b.finish("rn");
        let sol = solve_milp(&member.program, &SolverConfig::default()).unwrap();
        assert!((sol.objective + 2.0).abs() < 1e-8, "obj {}", sol.objective);
    }
}
