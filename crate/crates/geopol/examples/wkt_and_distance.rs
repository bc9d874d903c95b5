//! WKT geometry basics: parse and emit, point-in-polygon tests, and
//! great-circle distances on the WGS84 mean sphere.
//!
//! Run with: cargo run --example wkt_and_distance

use geopol::geometry::{
    distance_point_geometry_km, emit_wkt, haversine_km, parse_wkt, sf_within_point, Point,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a square with a square hole in its middle
    let wkt = "POLYGON((0 0,0 10,10 10,10 0,0 0),(4 4,6 4,6 6,4 6,4 4))";
    let holey = parse_wkt(wkt)?;
    println!("parsed:   {wkt}");
    println!("emitted:  {}", emit_wkt(&holey));

    for (lon, lat) in [(2.0, 2.0), (5.0, 5.0), (0.0, 5.0), (20.0, 5.0)] {
        let p = Point::new(lon, lat)?;
        println!(
            "POINT({lon} {lat}) within: {} (distance {:.3} km)",
            sf_within_point(p, &holey)?,
            distance_point_geometry_km(p, &holey),
        );
    }

    // boundary points are not within: simple-features `within` is interior
    let on_edge = Point::new(0.0, 5.0)?;
    assert!(!sf_within_point(on_edge, &holey)?);
    // the hole is outside even though the outer ring surrounds it
    assert!(!sf_within_point(Point::new(5.0, 5.0)?, &holey)?);

    let equator_degree = haversine_km(Point::new(0.0, 0.0)?, Point::new(1.0, 0.0)?);
    let antipodal = haversine_km(Point::new(0.0, 0.0)?, Point::new(180.0, 0.0)?);
    println!("1 degree along the equator: {equator_degree:.3} km");
    println!("antipodal points:           {antipodal:.3} km");
    Ok(())
}
