"""Reference catalog metadata for the bundled SDoH/environmental sources.

Names, provider organizations, variable counts, spatial scales, and
domains are carried verbatim from the upstream source roster (including
its capitalization quirks). Only descriptor metadata is seeded here;
values are loaded separately through the ingest pipeline.
"""

from __future__ import annotations

from .catalog import POINT_SCALE, CatalogStore, DatasetDescriptor
from .errors import IngestError
from .geo import GeoLevel

_EPA = "United States Environmental Protection Agency (EPA)"

# (id, display_name, source_org, variable_count, scale, domain)
REFERENCE_DATASETS: list[tuple] = [
    ("ahrq_sdoh", "Social Determinants of Health (SDOH) Database",
     "Agency for Healthcare research and Quality (AHRQ)", 405, GeoLevel.TRACT, "SDoH"),
    ("svi", "Social Vulnerability Index (SVI)",
     "Centers for Disease Control (CDC)", 158, GeoLevel.TRACT, "SDoH"),
    ("eji", "Environmental Justice Index (EJI)",
     "Centers for Disease Control (CDC)", 117, GeoLevel.TRACT, "SDoH"),
    ("adi", "Area Deprivation Index (ADI)",
     "Neighborhood Atlas Area Deprivation Index (ADI)", 4, GeoLevel.TRACT, "SDoH"),
    ("districts_full_list_new", "DistrictsFullList New",
     "HHS Protect Public Data Hub", 70, GeoLevel.TRACT, "SDoH"),
    ("covid19_hospital_capacity_by_facility",
     "COVID-19 Reported Patient Impact and Hospital Capacity by Facility",
     "U.S. Department of Health & Human Services", 128, GeoLevel.COUNTY, "SDoH"),
    ("covid19_diagnostic_lab_testing", "COVID-19 Diagnostic Lab Testing",
     "HHS Protect Public Data Hub", 9, GeoLevel.STATE, "SDoH"),
    ("hospital_data_coverage_report", "Hospital Data Coverage Report",
     "HHS Protect Public Data Hub", 147, GeoLevel.TRACT, "SDoH"),
    ("ahrf_diversity_dashboard", "Area Health Resources Files Diversity Dashboard Data",
     "Health Resources & Services Administration (HRSA)", 38, GeoLevel.STATE, "SDoH"),
    ("ahrf_county", "Area Health Resources Files (county)",
     "Health Resources & Services Administration (HRSA)", 4306, GeoLevel.COUNTY, "SDoH"),
    ("ahrf_state_national", "Area Health Resources Files (State and National)",
     "Health Resources & Services Administration (HRSA)", 1432, GeoLevel.STATE, "SDoH"),
    ("ucr_crime_by_state", "Crime in the United States, by State",
     "Uniform Crime Reporting (UCR)", 84, GeoLevel.STATE, "SDoH"),
    ("food_environment_atlas", "Food Environment Atlas",
     "United States department of agriculture (USDA)", 293, GeoLevel.COUNTY, "SDoH"),
    ("food_access_research_atlas", "Food Access Research Atlas",
     "USDA Food Access Research Atlas (FARA)", 147, GeoLevel.TRACT, "SDoH"),
    ("national_walkability_index", "National Walkability Index",
     _EPA, 117, GeoLevel.BLOCK_GROUP, "SDoH"),
    ("sdi", "Social Deprivation Index (SDI)",
     "Robert Graham Center (RGC)", 18, GeoLevel.TRACT, "SDoH"),
    ("coi_child_population", "Child Opportunity Index (COI) Child population data",
     "diversitydatakids.org", 8, GeoLevel.TRACT, "SDoH"),
    ("coi_overall_index", "Child Opportunity Index (COI) COI 3.0 overall index and three domains",
     "diversitydatakids.org", 38, GeoLevel.TRACT, "SDoH"),
    ("coi_subdomains", "Child Opportunity Index (COI) subdomains",
     "diversitydatakids.org", 128, GeoLevel.TRACT, "SDoH"),
    ("ruca_codes", "Rural-Urban Commuting Area Codes",
     "U.S. Department of Agriculture", 6, GeoLevel.TRACT, "SDoH"),
    ("poverty_area_measures", "Poverty Area Measures",
     "U.S. Department of Agriculture", 24, GeoLevel.TRACT, "SDoH"),
    ("epa_ozone_daily", "Ozone (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_co_daily", "CO (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_no2_daily", "NO2 (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_so2_daily", "SO2 (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pm25_frm_daily", "PM2.5 FRM/FEM Mass (88101) (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pm25_nonfrm_daily", "PM2.5 non FRM/FEM Mass (88502) (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pm25_speciation_daily", "PM2.5 Speciation(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pm10_mass_daily", "PM10 Mass (81102) (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pm10_speciation_daily", "PM10 Speciation(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pmc_mass_daily", "PMc Mass (86101) (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_pressure_daily", "Barometric Pressure (64101) (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_rh_dewpoint_daily", "RH and Dewpoint(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_temperature_daily", "Temperature (62101) (daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_winds_daily", "Winds (Resultant)(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_haps_daily", "HAPs(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_lead_daily", "Lead(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_nonoxnoy_daily", "NONOxNOy(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_vocs_daily", "VOCs(daily)", _EPA, 28, POINT_SCALE, "Environment"),
    ("epa_daily_aqi_county", "Daily AQI by County", _EPA, 8, GeoLevel.COUNTY, "Environment"),
    ("epa_daily_aqi_cbsa", "Daily AQI by CBSA", _EPA, 8, GeoLevel.CBSA, "Environment"),
]


def seed_reference_catalog(store: CatalogStore) -> int:
    """Register every reference descriptor into an empty store."""
    if store.dataset_ids():
        raise IngestError("NonEmptyRegistry", "reference seed requires an empty catalog")
    for dataset_id, name, org, count, scale, domain in REFERENCE_DATASETS:
        store.register_source(
            DatasetDescriptor(
                id=dataset_id,
                display_name=name,
                source_org=org,
                variable_count=count,
                spatial_scale=scale,
                domain=domain,
            )
        )
    return len(REFERENCE_DATASETS)
