//! Deliberately broken variants of the presets. Every one must fail some
//! condition by a wide margin; a mutation that slips through means the
//! checks are blind to that kind of error.

use num_rational::Rational64;
use num_traits::Zero;

use crate::error::CheckError;
use crate::exprkit::{parse_expr, Expr, SamplePlan};
use crate::hamcheck::{check_ferapontov, check_local_hamiltonian, LocalOperator, NonlocalOperator};
use crate::report::CheckReport;

use super::operators::{h1_theta_with, h2_hat_local, h3_hat_local, h3_tails, nutku_with};
use super::{
    assemble_h2_hat, build_nutku, build_remark_operators, default_constant_block, default_lambdas,
    default_theta, preset_plan, DriftError, RemarkVariant,
};

#[derive(Debug, Clone)]
pub enum MutationTarget {
    Local(LocalOperator),
    Nonlocal(NonlocalOperator),
}

#[derive(Debug, Clone)]
pub struct Mutation {
    pub name: &'static str,
    pub description: &'static str,
    pub target: MutationTarget,
}

impl Mutation {
    pub fn dim(&self) -> usize {
        match &self.target {
            MutationTarget::Local(a) => a.dim(),
            MutationTarget::Nonlocal(a) => a.dim(),
        }
    }

    /// The drift-flux sampling box in the mutated operator's dimension.
    pub fn plan(&self) -> SamplePlan {
        preset_plan(self.dim())
    }

    /// Runs the suite the unmutated operator passes.
    pub fn run(&self, plan: &SamplePlan) -> Result<CheckReport, CheckError> {
        let mut rep = match &self.target {
            MutationTarget::Local(a) => check_local_hamiltonian(a, plan)?,
            MutationTarget::Nonlocal(a) => check_ferapontov(a, plan)?,
        };
        rep.name = format!("mutation {}", self.name);
        Ok(rep)
    }
}

fn negate_b(a: &mut LocalOperator, i: usize, j: usize, ks: &[usize]) {
    for &k in ks {
        let v = a.b.get(i, j, k).clone();
        a.b.set(i, j, k, -v);
    }
}

fn build() -> Result<Vec<Mutation>, DriftError> {
    let theta = default_theta();
    let (l1, l2) = default_lambdas();
    let cb = default_constant_block();
    let r3 = parse_expr("r3", 3).map_err(CheckError::from)?;
    let mut out = Vec::new();
    let mut push = |name, description, target| {
        out.push(Mutation {
            name,
            description,
            target,
        })
    };

    let mut h1 = build_nutku(1)?;
    negate_b(&mut h1, 0, 1, &[0, 1]);
    push(
        "h1-b12-flip",
        "first Nutku operator, b^{12} negated",
        MutationTarget::Local(h1),
    );

    let mut h2 = build_nutku(2)?;
    negate_b(&mut h2, 0, 0, &[0, 1]);
    push(
        "h2-b11-flip",
        "second Nutku operator, b^{11} negated",
        MutationTarget::Local(h2),
    );

    let mut h3 = build_nutku(3)?;
    let g22 = h3.g.get(1, 1).clone();
    let mut rows = h3.g.rows();
    rows[1][1] = -g22;
    h3.g = crate::geomtensor::MetricField::new(rows)?;
    push(
        "h3-g22-flip",
        "third Nutku operator, g^{22} negated",
        MutationTarget::Local(h3),
    );

    let h2w = nutku_with(2, Rational64::new(11, 20))?;
    push(
        "h2-prefactor",
        "second Nutku operator, connection prefactor 0.55 instead of 1/2",
        MutationTarget::Local(h2w),
    );

    let mut t = h1_theta_with(&r3, 1)?;
    negate_b(&mut t, 0, 2, &[2]);
    push(
        "h1-theta-b13-flip",
        "local prolongation (Θ = r3), b^{13}_3 negated",
        MutationTarget::Local(t),
    );

    push(
        "h1-theta-f33-flip",
        "local prolongation (Θ = r3), (3,3) entry with the opposite sign",
        MutationTarget::Local(h1_theta_with(&r3, -1)?),
    );

    push(
        "h1-theta-zero",
        "local prolongation with Θ = 0",
        MutationTarget::Local(h1_theta_with(&Expr::zero(), 1)?),
    );

    let mut no_b3 = cb.clone();
    no_b3.b3 = [Rational64::zero(); 3];
    push(
        "h2-hat-b3-zero",
        "second nonlocal operator with b3 = (0, 0, 0)",
        MutationTarget::Nonlocal(assemble_h2_hat(&theta, &l1, &l2, &no_b3)?),
    );

    let mut eps = cb.clone();
    eps.eps[2] = eps.eps[2].flip();
    push(
        "h2-hat-eps3-flip",
        "second nonlocal operator with ε3 = +1",
        MutationTarget::Nonlocal(assemble_h2_hat(&theta, &l1, &l2, &eps)?),
    );

    let mut c1 = cb.clone();
    c1.c[0] *= Rational64::new(11, 10);
    push(
        "h2-hat-c1-plus-10pct",
        "second nonlocal operator with c1 raised by 10%",
        MutationTarget::Nonlocal(assemble_h2_hat(&theta, &l1, &l2, &c1)?),
    );

    let mut w = assemble_h2_hat(&theta, &l1, &l2, &cb)?;
    let w11 = w.tails[0].get(0, 0).clone();
    w.tails[0].set(0, 0, -w11);
    push(
        "h2-hat-w1-11-flip",
        "second nonlocal operator, entry (1,1) of the first affinor negated",
        MutationTarget::Nonlocal(w),
    );

    let f33 = NonlocalOperator::new(
        h2_hat_local(&theta, -1)?,
        assemble_h2_hat(&theta, &l1, &l2, &cb)?.tails,
    )?;
    push(
        "h2-hat-f33-flip",
        "second nonlocal operator, (3,3) entry with the opposite sign",
        MutationTarget::Nonlocal(f33),
    );

    let whole = NonlocalOperator::new(
        h3_hat_local(&theta)?,
        h3_tails(&l1, &l2, &cb, Rational64::from_integer(1)),
    )?;
    push(
        "h3-hat-phi-full",
        "third nonlocal operator with the Φ term of the affinors not halved",
        MutationTarget::Nonlocal(whole),
    );

    let [mut r1, _, _] = build_remark_operators(&r3, RemarkVariant::Corrected)?;
    negate_b(&mut r1, 2, 2, &[2]);
    push(
        "remark-h1-b33-flip",
        "first transformed operator (Θ̃ = r3), b^{33}_3 negated",
        MutationTarget::Local(r1),
    );

    let [printed, _, _] = build_remark_operators(&Expr::one(), RemarkVariant::AsPrinted)?;
    push(
        "remark-h1-as-printed",
        "first transformed operator with its (1,2) block as displayed",
        MutationTarget::Local(printed),
    );

    Ok(out)
}

/// Every cataloged mutation.
pub fn mutation_catalog() -> Vec<Mutation> {
    build().expect("catalog is built from static presets")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_mutation_fails_clearly() {
        let cat = mutation_catalog();
        assert!(cat.len() >= 10);
        for m in &cat {
            let rep = m.run(&m.plan()).unwrap();
            let worst = rep.failed().map(|c| c.max_residual).fold(0.0, f64::max);
            assert!(!rep.passed && worst >= 1e-3, "{}: {rep:?}", m.name);
        }
    }
}
