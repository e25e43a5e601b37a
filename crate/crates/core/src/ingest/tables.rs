use std::collections::BTreeMap;

use super::CensusCell;
use crate::demand::{WeatherSeries, HOURS_PER_YEAR};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::hydro::{PipeCatalog, PipeCatalogEntry};
use crate::rasterex::ControlPoint;

/// Census construction-year class label to representative year.
pub type YearClasses = BTreeMap<String, i32>;

/// Class midpoints (rounded half up) for the usual census construction-year classes.
pub fn default_year_classes() -> YearClasses {
    [
        ("before 1919", 1900),
        ("1919-1948", 1934),
        ("1949-1978", 1964),
        ("1979-1986", 1983),
        ("1987-1990", 1989),
        ("1991-1995", 1993),
        ("1996-2000", 1998),
        ("2001-2004", 2003),
        ("2005-2008", 2007),
        ("2009 and later", 2011),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_owned(), v))
    .collect()
}

fn reader<'a>(source: &str, text: &'a str, header: &[&str]) -> Result<csv::Reader<&'a [u8]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(source, "header", e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if got != header {
        return Err(Error::parse(
            source,
            "header",
            format!("expected {:?}, found {:?}", header.join(","), got.join(",")),
        ));
    }
    Ok(rdr)
}

fn rows<'a>(
    source: &'a str,
    rdr: &'a mut csv::Reader<&'a [u8]>,
) -> impl Iterator<Item = Result<(String, csv::StringRecord)>> + 'a {
    rdr.records().map(move |r| {
        let rec = r.map_err(|e| {
            let locus = e
                .position()
                .map_or("row ?".to_string(), |p| format!("row {}", p.line()));
            Error::parse(source, locus, e.to_string())
        })?;
        let locus = format!("row {}", rec.position().map_or(0, |p| p.line()));
        Ok((locus, rec))
    })
}

fn field<T: std::str::FromStr>(source: &str, locus: &str, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse::<T>().ok())
        .ok_or_else(|| Error::parse(source, locus, format!("{name} is missing or malformed")))
}

fn parse_year(label: &str, classes: &YearClasses) -> Option<i32> {
    let norm = label.trim().replace(['\u{2013}', '\u{2014}'], "-");
    if let Ok(y) = norm.parse::<i32>() {
        return Some(y);
    }
    if let Some(&y) = classes.get(&norm).or_else(|| classes.get(label.trim())) {
        return Some(y);
    }
    let (a, b) = norm.split_once('-')?;
    let (a, b) = (a.trim().parse::<i32>().ok()?, b.trim().parse::<i32>().ok()?);
    // midpoint, half up
    (a <= b).then(|| (a + b + 1).div_euclid(2))
}

/// Census grid: `grid_x,grid_y,construction_year`. The year column may hold an
/// integer or a class label resolved through `classes`.
pub fn load_census(text: &str, classes: &YearClasses) -> Result<Vec<CensusCell>> {
    const SRC: &str = "census";
    let mut rdr = reader(SRC, text, &["grid_x", "grid_y", "construction_year"])?;
    rows(SRC, &mut rdr)
        .map(|r| {
            let (locus, rec) = r?;
            let grid_x = field(SRC, &locus, &rec, 0, "grid_x")?;
            let grid_y = field(SRC, &locus, &rec, 1, "grid_y")?;
            let label = rec.get(2).unwrap_or("");
            let construction_year = parse_year(label, classes)
                .ok_or_else(|| Error::parse(SRC, &locus, format!("unknown construction year {label:?}")))?;
            if !(1500..=2100).contains(&construction_year) {
                return Err(Error::parse(
                    SRC,
                    &locus,
                    format!("year {construction_year} outside 1500..=2100"),
                ));
            }
            Ok(CensusCell {
                grid_x,
                grid_y,
                construction_year,
            })
        })
        .collect()
}

/// Pipe catalog: `dn,inner_diameter_m,roughness_mm`, diameters strictly increasing.
pub fn load_catalog(text: &str) -> Result<PipeCatalog> {
    const SRC: &str = "catalog";
    let mut rdr = reader(SRC, text, &["dn", "inner_diameter_m", "roughness_mm"])?;
    let mut entries: Vec<PipeCatalogEntry> = Vec::new();
    for r in rows(SRC, &mut rdr) {
        let (locus, rec) = r?;
        let dn: String = field(SRC, &locus, &rec, 0, "dn")?;
        let inner_diameter: f64 = field(SRC, &locus, &rec, 1, "inner_diameter_m")?;
        let roughness_mm: f64 = field(SRC, &locus, &rec, 2, "roughness_mm")?;
        if dn.is_empty() {
            return Err(Error::parse(SRC, &locus, "dn label is empty"));
        }
        if !(inner_diameter > 0.0 && inner_diameter.is_finite()) {
            return Err(Error::parse(SRC, &locus, "inner_diameter_m must be positive"));
        }
        if !(roughness_mm >= 0.0 && roughness_mm.is_finite()) {
            return Err(Error::parse(SRC, &locus, "roughness_mm must be non-negative"));
        }
        if entries.last().is_some_and(|e| e.inner_diameter >= inner_diameter) {
            return Err(Error::parse(SRC, &locus, "inner diameters must be strictly increasing"));
        }
        entries.push(PipeCatalogEntry {
            dn,
            inner_diameter,
            roughness_mm,
        });
    }
    PipeCatalog::new(entries).map_err(|e| Error::parse(SRC, "document", e.to_string()))
}

/// Raster georeference anchors: `col,row,lon,lat` with pixel coordinates
/// measured from the top-left pixel center.
pub fn load_control_points(text: &str) -> Result<Vec<ControlPoint>> {
    const SRC: &str = "control points";
    let mut rdr = reader(SRC, text, &["col", "row", "lon", "lat"])?;
    rows(SRC, &mut rdr)
        .map(|r| {
            let (locus, rec) = r?;
            let col: f64 = field(SRC, &locus, &rec, 0, "col")?;
            let row: f64 = field(SRC, &locus, &rec, 1, "row")?;
            let lon = field(SRC, &locus, &rec, 2, "lon")?;
            let lat = field(SRC, &locus, &rec, 3, "lat")?;
            let geo = GeoPoint::new(lon, lat).map_err(|e| Error::parse(SRC, &locus, e.to_string()))?;
            if !(col.is_finite() && row.is_finite()) {
                return Err(Error::parse(SRC, &locus, "pixel coordinates must be finite"));
            }
            Ok(ControlPoint { col, row, geo })
        })
        .collect()
}

/// Weather: `hour,ambient_temp_c`, exactly 8760 rows with hours 0..8759 in order.
pub fn load_weather(text: &str) -> Result<WeatherSeries> {
    const SRC: &str = "weather";
    let mut rdr = reader(SRC, text, &["hour", "ambient_temp_c"])?;
    let mut temps = Vec::with_capacity(HOURS_PER_YEAR);
    for r in rows(SRC, &mut rdr) {
        let (locus, rec) = r?;
        let hour: usize = field(SRC, &locus, &rec, 0, "hour")?;
        if hour != temps.len() {
            return Err(Error::parse(
                SRC,
                &locus,
                format!("expected hour {}, found {hour}", temps.len()),
            ));
        }
        let t: f64 = field(SRC, &locus, &rec, 1, "ambient_temp_c")?;
        if !(-50.0..=60.0).contains(&t) {
            return Err(Error::parse(SRC, &locus, format!("temperature {t} outside [-50, 60]")));
        }
        temps.push(t);
    }
    if temps.len() != HOURS_PER_YEAR {
        return Err(Error::parse(
            SRC,
            "document",
            format!("expected {HOURS_PER_YEAR} rows, found {}", temps.len()),
        ));
    }
    WeatherSeries::new(temps).map_err(|e| Error::parse(SRC, "document", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weather_csv(rows: usize) -> String {
        let mut s = String::from("hour,ambient_temp_c\n");
        for h in 0..rows {
            s.push_str(&format!("{h},{}\n", (h % 24) as f64 * 0.5));
        }
        s
    }

    #[test]
    fn weather_length() {
        assert_eq!(load_weather(&weather_csv(8760)).unwrap().temps().len(), 8760);
        assert!(load_weather(&weather_csv(8759)).is_err());
    }

    #[test]
    fn weather_hour_order() {
        let s = weather_csv(8760).replacen("\n5,", "\n6,", 1);
        let err = load_weather(&s).unwrap_err().to_string();
        assert!(err.contains("row 7"), "{err}");
    }

    #[test]
    fn census_years_and_classes() {
        let text = "grid_x,grid_y,construction_year\n2,3,1964\n4,5,1949-1978\n6,7,1919\u{2013}1948\n1,1,1990-1993\n";
        let cells = load_census(text, &default_year_classes()).unwrap();
        let years: Vec<i32> = cells.iter().map(|c| c.construction_year).collect();
        assert_eq!(years, vec![1964, 1964, 1934, 1992]);
        assert!(load_census(
            "grid_x,grid_y,construction_year\n1,1,ancient\n",
            &default_year_classes()
        )
        .is_err());
        assert!(load_census("x,y,year\n", &default_year_classes()).is_err());
    }

    #[test]
    fn catalog_ordering() {
        let ok = "dn,inner_diameter_m,roughness_mm\nDN50,0.0545,0.1\nDN65,0.0703,0.1\n";
        assert_eq!(load_catalog(ok).unwrap().entries().len(), 2);
        let bad = "dn,inner_diameter_m,roughness_mm\nDN65,0.0703,0.1\nDN50,0.0545,0.1\n";
        let err = load_catalog(bad).unwrap_err().to_string();
        assert!(err.contains("row 3"), "{err}");
    }
}
