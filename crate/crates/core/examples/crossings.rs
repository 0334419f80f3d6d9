//! Sample one critical configuration and draw its shortest and lowest crossings.
//!
//! cargo run --release --example crossings -- [n] [seed]

use std::collections::HashSet;

use perclab::crossing::crossings;
use perclab::lattice::{make_box, sample_configuration, LatticeKind, LatticeModel, Point};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: u32 = args.first().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);

    let b = make_box(n)?;
    // About half of all configurations cross; take the first seed that does.
    let (seed, result) = (seed..)
        .map(|s| (s, sample_configuration(LatticeModel::critical(LatticeKind::SquareBond), b, s)))
        .map(|(s, c)| crossings(&c).map(|r| (s, r)))
        .find(|r| r.as_ref().map_or(true, |(_, r)| r.shortest.is_some()))
        .expect("unbounded seed range")?;
    let (Some(shortest), Some(lowest)) = (&result.shortest, &result.lowest) else { unreachable!() };

    let s: HashSet<Point> = shortest.vertices().iter().copied().collect();
    let l: HashSet<Point> = lowest.vertices().iter().copied().collect();
    // S = shortest only, L = lowest only, # = both
    for y in (b.y_min()..=b.y_max()).rev() {
        let row: String = (b.x_min()..=b.x_max())
            .map(|x| {
                let p = Point::new(x, y);
                match (s.contains(&p), l.contains(&p)) {
                    (true, true) => '#',
                    (true, false) => 'S',
                    (false, true) => 'L',
                    _ => '.',
                }
            })
            .flat_map(|c| [c, ' '])
            .collect();
        println!("{}", row.trim_end());
    }
    println!("seed {seed}: shortest S_n = {}, lowest L_n = {}", shortest.len(), lowest.len());
    Ok(())
}
