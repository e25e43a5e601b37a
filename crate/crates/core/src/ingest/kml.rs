use roxmltree::{Document, Node as XmlNode};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GeoPolyline};

const SOURCE: &str = "kml";

fn is(node: &XmlNode, name: &str) -> bool {
    node.is_element() && node.tag_name().name() == name
}

/// Extracts every `LineString` below a `Placemark`, including those nested
/// in `MultiGeometry`. Altitudes are dropped; points and polygons are ignored.
pub fn parse_kml(text: &str) -> Result<Vec<GeoPolyline>> {
    let doc = Document::parse(text).map_err(|e| Error::parse(SOURCE, "document", e.to_string()))?;
    let mut out = Vec::new();
    for (pi, placemark) in doc.descendants().filter(|n| is(n, "Placemark")).enumerate() {
        for (li, ls) in placemark.descendants().filter(|n| is(n, "LineString")).enumerate() {
            let locus = format!("placemark {pi}, linestring {li}");
            let coords = ls
                .children()
                .find(|n| is(n, "coordinates"))
                .ok_or_else(|| Error::parse(SOURCE, &locus, "missing <coordinates>"))?;
            let text = coords.text().unwrap_or("");
            let points = parse_coordinates(text).map_err(|m| Error::parse(SOURCE, &locus, m))?;
            if points.len() < 2 {
                return Err(Error::parse(SOURCE, &locus, "linestring has fewer than 2 points"));
            }
            out.push(GeoPolyline { points });
        }
    }
    Ok(out)
}

fn parse_coordinates(text: &str) -> std::result::Result<Vec<GeoPoint>, String> {
    text.split_whitespace()
        .map(|tuple| {
            let parts: Vec<&str> = tuple.split(',').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(format!("coordinate tuple {tuple:?} must be lon,lat[,alt]"));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("coordinate {s:?} is not numeric"))
            };
            let (lon, lat) = (num(parts[0])?, num(parts[1])?);
            if let Some(alt) = parts.get(2) {
                num(alt)?;
            }
            GeoPoint::new(lon, lat).map_err(|e| e.to_string())
        })
        .collect()
}

/// Minimal KML document with one Placemark/LineString per polyline.
pub fn polylines_to_kml(lines: &[GeoPolyline]) -> String {
    let mut s = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n<Document>\n",
    );
    for (i, l) in lines.iter().enumerate() {
        let coords: Vec<String> = l.points.iter().map(|p| format!("{},{},0", p.lon, p.lat)).collect();
        s.push_str(&format!(
            "<Placemark><name>pipe {i}</name><LineString><coordinates>{}</coordinates></LineString></Placemark>\n",
            coords.join(" ")
        ));
    }
    s.push_str("</Document>\n</kml>\n");
    s
}
