"""Default Jinja2 templates for text reports.

Filters available in every template:
  - pct: fraction → percentage with two decimals ("n/a" for None)
  - fmt(digits): fixed-point float (default 4 digits, "n/a" for None)
  - pm: Aggregate (or dict with mean/std) → "mean ± std" in percent
"""

# Template for `evaluate`
# Context: report (MetricReport body dict)
EXPERIMENT_REPORT = """\
Experiment report ({{ report.schema }})
Scenario: {{ report.scenario }}
Seeds: {{ report.seeds | map(attribute="seed") | join(", ") }}

## Per seed
{% for row in report.seeds %}
- seed {{ row.seed }}: accuracy {{ row.accuracy | pct }}\
{% if row.erm_accuracy is not none %} (ERM {{ row.erm_accuracy | pct }}){% endif %}\
, AUC UKC {{ row.auc_ukc | pct }}, AUC UKD {{ row.auc_ukd | pct }} (L_re {{ row.auc_ukd_recon | pct }})
{% endfor %}

## Aggregate
{% for name, agg in report.aggregate.items() %}
- {{ name }}: {{ agg | pm }} (n={{ agg.n }})
{% endfor %}
{% if report.seeds and report.seeds[0].domain_separation %}

## Domain separation AUC (vs is_ukd)
{% for scorer in report.seeds[0].domain_separation %}
- {{ scorer }}: {{ report.aggregate["domain_separation." ~ scorer] | pm }}
{% endfor %}
{% endif %}
{% if report.seeds and report.seeds[0].ablations %}

## Ablation (test accuracy)
- full: {{ report.aggregate["accuracy"] | pm }}
{% if report.seeds[0].erm_accuracy is not none %}
- ERM: {{ report.aggregate["erm_accuracy"] | pm }}
{% endif %}
{% for name in report.seeds[0].ablations %}
- {{ name }}: {{ report.aggregate["ablation." ~ name] | pm }}
{% endfor %}
{% endif %}
"""

# Template for `reproduce`
# Context: acceptance (AcceptanceReport body dict), passed (bool)
ACCEPTANCE_REPORT = """\
Acceptance report ({{ acceptance.schema }})
Seeds: {{ acceptance.seeds | join(", ") }}
Result: {{ "PASS" if passed else "FAIL" }}

{% for c in acceptance.criteria %}
[{{ "PASS" if c.passed else "FAIL" }}] {{ c.number }}. {{ c.name }}\
{% if c.value is not none %}: {{ c.value | fmt }}{% if c.threshold is not none %} (threshold {{ c.threshold | fmt }}){% endif %}{% endif %}

{% if c.detail %}      {{ c.detail }}
{% endif %}
{% endfor %}
"""
