//! Closed-form Bachelier prices, Greeks and implied vol for a few strikes.

use normvol::{atm_bachelier_from_bs, bachelier_quote, implied_vol_bachelier, MarketSpec};

fn main() -> normvol::Result<()> {
    let sigma = 20.0;
    println!("strike      price        delta      gamma        vega     implied");
    for k in [80.0, 90.0, 100.0, 110.0, 120.0] {
        let m = MarketSpec::new(100.0, k, 1.0)?;
        let q = bachelier_quote(&m, sigma)?;
        let iv = implied_vol_bachelier(&m, q.price)?;
        println!(
            "{k:6.1} {:10.6} {:10.6} {:10.6} {:10.6} {:11.8}",
            q.price, q.delta, q.gamma, q.vega, iv
        );
    }
    // a 20% lognormal ATM vol on a spot of 100 is close to a normal vol of 20
    let normal = atm_bachelier_from_bs(100.0, 1.0, 0.2)?;
    println!("ATM normal vol matching 20% Black-Scholes: {normal:.10}");
    Ok(())
}
