//! Finite-difference validation of the analytic residual gradient.
//!
//! The check perturbs one coordinate at a time. Only groups containing the
//! perturbed position contribute to that coordinate's derivative, so the
//! central difference runs over exactly those groups — identical in value,
//! but the subtraction then cancels across a sum of ~3 terms instead of the
//! full loss, which keeps rounding noise a few orders below the tolerance.

use softcsp::{residual_grad, tp_image, ConstraintProgram, SoftAssignment};

use crate::{Failure, GradcheckArgs};

/// Residual of one group: squared distance between the member rows and
/// their operator image.
fn group_residual(p: &SoftAssignment, program: &ConstraintProgram, group: usize) -> f64 {
    let group = &program.groups()[group];
    let image = tp_image(p, group).expect("probe assignments have valid shape");
    let mut total = 0.0;
    for (slot, &pos) in group.members.iter().enumerate() {
        for s in 0..p.symbols() {
            let r = p.get(pos, s) - image.get(slot, s);
            total += r * r;
        }
    }
    total
}

/// Loss restricted to the groups containing `pos`, with coordinate
/// `(pos, sym)` shifted by `delta`.
fn shifted_loss(
    base: &SoftAssignment,
    program: &ConstraintProgram,
    pos: usize,
    sym: usize,
    delta: f64,
) -> f64 {
    let k = base.symbols();
    let mut data: Vec<f64> = (0..base.positions())
        .flat_map(|i| base.row(i).iter().copied())
        .collect();
    data[pos * k + sym] += delta;
    let shifted = SoftAssignment::from_raw(base.positions(), k, data)
        .expect("shifted copy keeps the base shape");
    program
        .membership(pos)
        .iter()
        .map(|&g| group_residual(&shifted, program, g))
        .sum()
}

struct Worst {
    err: f64,
    probe: usize,
    pos: usize,
    sym: usize,
}

pub fn run(args: GradcheckArgs) -> Result<(), Failure> {
    if args.fd_step <= 0.0 {
        return Err(Failure::input("--fd-step must be positive"));
    }
    if args.tol <= 0.0 {
        return Err(Failure::input("--tol must be positive"));
    }
    let program = match &args.program {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("program {}: {e}", path.display())))?;
            text.parse::<ConstraintProgram>()
                .map_err(|e| Failure::input(format!("program: {e}")))?
        }
        None => {
            if args.box_size < 2 {
                return Err(Failure::input("--box-size must be at least 2"));
            }
            ConstraintProgram::sudoku(args.box_size)
        }
    };
    let (n, k) = (program.positions(), program.symbols());
    println!("program {n}x{k} groups {}", program.groups().len());
    println!("probes {} coords {}", args.count, n * k);

    let mut worst = Worst { err: 0.0, probe: 0, pos: 0, sym: 0 };
    for probe in 0..args.count {
        let mut rng = softcsp::rng_from_seed(softcsp::derive_seed(args.seed, probe as u64));
        let p = SoftAssignment::<f64>::random(&mut rng, n, k);
        let analytic = residual_grad(&p, &program).expect("probe assignments have valid shape");
        for pos in 0..n {
            for sym in 0..k {
                let plus = shifted_loss(&p, &program, pos, sym, args.fd_step);
                let minus = shifted_loss(&p, &program, pos, sym, -args.fd_step);
                let fd = (plus - minus) / (2.0 * args.fd_step);
                let a = analytic[pos * k + sym];
                let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
                if err > worst.err {
                    worst = Worst { err, probe, pos, sym };
                }
            }
        }
    }
    println!(
        "max-rel-err {:.16e} (probe {} pos {} sym {})",
        worst.err, worst.probe, worst.pos, worst.sym
    );
    println!("tol {:.16e}", args.tol);
    if worst.err > args.tol {
        Err(Failure::check(format!(
            "analytic and finite-difference gradients disagree: {:.3e} > {:.3e}",
            worst.err, args.tol
        )))
    } else {
        println!("gradcheck ok");
        Ok(())
    }
}
