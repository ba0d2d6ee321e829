//! Prints a convergence table: `cargo run --release --example study -- square 3 2 5 [lattice|cellwise]`.

use wgmorley::{convergence_study, manufactured_case, MeshFamily, PenaltyConvention, Solver};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let family: MeshFamily = args
        .first()
        .map_or("square", |s| s.as_str())
        .parse()
        .expect("mesh family");
    let k: usize = args.get(1).map_or(3, |s| s.parse().unwrap());
    let lo: u32 = args.get(2).map_or(2, |s| s.parse().unwrap());
    let hi: u32 = args.get(3).map_or(4, |s| s.parse().unwrap());
    let case = manufactured_case(family.dim());
    let penalty: PenaltyConvention = args
        .get(4)
        .map_or("lattice", |s| s.as_str())
        .parse()
        .expect("penalty convention");
    let report = convergence_study(
        family,
        k,
        lo..=hi,
        &case,
        penalty,
        Solver::Schur,
        1e-12,
        |t| {
            eprintln!(
                "level {} dofs {} unknowns {} {:.2?}",
                t.level, t.dofs, t.unknowns, t.elapsed
            )
        },
    )
    .unwrap_or_else(|e| panic!("{e}"));
    print!("{}", report.to_markdown());
}
