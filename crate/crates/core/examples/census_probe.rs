use slabrad::model::SlabParams;
use slabrad::spectrum::find_modes;
use std::io::Write;

fn main() {
    for (d0, g) in [(0.1, 1e-3), (0.1, 1e-5), (1e-3, 1e-3)] {
        for n in 1..=4 {
            print!("corner d0={d0} g={g} n={n} ... ");
            std::io::stdout().flush().unwrap();
            let t = std::time::Instant::now();
            let p = SlabParams::dimensionless(n, d0, g).unwrap();
            match find_modes(&p, None) {
                Ok(set) => println!("{} roots in {:.2}s", set.count(), t.elapsed().as_secs_f64()),
                Err(e) => println!("ERROR {e} in {:.2}s", t.elapsed().as_secs_f64()),
            }
        }
    }
}
