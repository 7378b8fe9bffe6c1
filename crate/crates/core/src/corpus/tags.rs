//! Category tag lists selecting the hotel and food subsets of the Yelp data.

use serde::{Deserialize, Serialize};

pub const HOTEL_TAGS: &[&str] = &[
    "Hotels",
    "Mountain Huts",
    "Residences",
    "Rest Stops",
    "Bed & Breakfast",
    "Hostels",
    "Resorts",
];

pub const FOOD_TAGS: &[&str] = &[
    "American",
    "Argentine",
    "Asian Fusion",
    "Australian",
    "Austrian",
    "Bangladeshi",
    "Belgian",
    "Brasseries",
    "Brazilian",
    "British",
    "Cambodian",
    "Cantonese",
    "Catalan",
    "Chinese",
    "Conveyor Belt Sushi",
    "Cuban",
    "Czech",
    "Delis",
    "Empanadas",
    "Falafel",
    "Filipino",
    "Fish & Chips",
    "French",
    "German",
    "Greek",
    "Hawaiian",
    "Himalayan/Nepalese",
    "Hot Pot",
    "Hungarian",
    "Iberian",
    "Indian",
    "Indonesian",
    "Irish",
    "Italian",
    "Japanese",
    "Japanese Curry",
    "Korean",
    "Latin American",
    "Lebanese",
    "Malaysian",
    "Mediterranean",
    "Mexican",
    "Middle Eastern",
    "Modern European",
    "Mongolian",
    "New Mexican Cuisine",
    "Noodles",
    "Pakistani",
    "Pan Asian",
    "Persian/Iranian",
    "Peruvian",
    "Piadina",
    "Pizza",
    "Poke",
    "Polish",
    "Polynesian",
    "Portuguese",
    "Ramen",
    "Russian",
    "Salad",
    "Scandinavian",
    "Scottish",
    "Seafood",
    "Shanghainese",
    "Sicilian",
    "Singaporean",
    "Soup",
    "Southern",
    "Spanish",
    "Sri Lankan",
    "Steakhouses",
    "Sushi Bars",
    "Syrian",
    "Tacos",
    "Tapas Bars",
    "Tapas/Small Plates",
    "Teppanyaki",
    "Tex-Mex",
    "Thai",
    "Turkish",
    "Ukrainian",
    "Vegan",
    "Vegetarian",
    "Vietnamese",
    "Wraps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoryPreset {
    Hotel,
    Food,
}

impl CategoryPreset {
    pub fn tags(self) -> &'static [&'static str] {
        match self {
            CategoryPreset::Hotel => HOTEL_TAGS,
            CategoryPreset::Food => FOOD_TAGS,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn lists_have_no_repeats() {
        assert_eq!(HOTEL_TAGS.len(), 7);
        assert_eq!(FOOD_TAGS.len(), 85);
        for list in [HOTEL_TAGS, FOOD_TAGS] {
            assert_eq!(list.iter().collect::<BTreeSet<_>>().len(), list.len());
        }
    }
}
