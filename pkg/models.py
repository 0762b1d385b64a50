"""
Database Models for the Critical Tori Run Service
Stores pipeline runs, their verification reports and per-check results.
"""

from flask_sqlalchemy import SQLAlchemy
from datetime import datetime

db = SQLAlchemy()


class VerificationRun(db.Model):
    """One pipeline subcommand executed through the service."""
    __tablename__ = 'verification_runs'

    id = db.Column(db.Integer, primary_key=True)
    subcommand = db.Column(db.String(32), nullable=False)
    config_text = db.Column(db.Text, nullable=False)
    passed = db.Column(db.Boolean, nullable=False)
    error_message = db.Column(db.Text)
    report = db.Column(db.JSON)
    artifacts = db.Column(db.JSON)
    created_at = db.Column(db.DateTime, default=datetime.utcnow)
    execution_time = db.Column(db.Float)  # seconds

    checks = db.relationship('CheckRecord', backref='run', lazy=True, cascade='all, delete-orphan')

    def to_dict(self, include_report=True):
        data = {
            'id': self.id,
            'subcommand': self.subcommand,
            'config_text': self.config_text,
            'passed': self.passed,
            'error_message': self.error_message,
            'artifacts': self.artifacts or [],
            'created_at': self.created_at.isoformat(),
            'execution_time': self.execution_time,
            'check_count': len(self.checks),
        }
        if include_report:
            data['report'] = self.report
            data['checks'] = [check.to_dict() for check in self.checks]
        return data


class CheckRecord(db.Model):
    """One named check of a run's report."""
    __tablename__ = 'check_records'

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('verification_runs.id'), nullable=False)
    name = db.Column(db.String(200), nullable=False)
    value = db.Column(db.Float)
    tolerance = db.Column(db.Float)
    passed = db.Column(db.Boolean, nullable=False)
    note = db.Column(db.String(200))

    def to_dict(self):
        return {
            'name': self.name,
            'value': self.value,
            'tolerance': self.tolerance,
            'passed': self.passed,
            'note': self.note,
        }


def init_db(app):
    """Initialize database with the Flask app."""
    db.init_app(app)

    with app.app_context():
        db.create_all()
        app.logger.info("database tables ready")


def get_recent_runs(limit=10):
    """Most recent runs first."""
    return VerificationRun.query.order_by(
        VerificationRun.created_at.desc(), VerificationRun.id.desc()
    ).limit(limit).all()


def get_run_stats():
    """Run counts, pass rate and the checks that fail most often."""
    total_runs = VerificationRun.query.count()
    passed_runs = VerificationRun.query.filter_by(passed=True).count()
    by_subcommand = {}
    for run in VerificationRun.query.all():
        by_subcommand[run.subcommand] = by_subcommand.get(run.subcommand, 0) + 1

    failing = {}
    for check in CheckRecord.query.filter_by(passed=False).all():
        failing[check.name] = failing.get(check.name, 0) + 1
    most_failed = sorted(failing.items(), key=lambda item: (-item[1], item[0]))[:5]

    return {
        'total_runs': total_runs,
        'passed_runs': passed_runs,
        'failed_runs': total_runs - passed_runs,
        'pass_rate': round((passed_runs / total_runs * 100) if total_runs > 0 else 0, 1),
        'runs_by_subcommand': by_subcommand,
        'most_failed_checks': [{'name': name, 'count': count} for name, count in most_failed],
    }


def _finite_or_none(value):
    if value is None:
        return None
    value = float(value)
    return value if value == value and abs(value) != float('inf') else None


def save_run(subcommand, config_text, result, execution_time):
    """
    Save a run to the database.

    Args:
        subcommand (str): Pipeline subcommand
        config_text (str): Effective configuration as key-value text
        result (dict): 'passed', 'report' (dict form), 'artifacts', optional 'error'
        execution_time (float): Wall time in seconds

    Returns:
        VerificationRun: Saved record
    """
    report = result.get('report') or {}
    run = VerificationRun(
        subcommand=subcommand,
        config_text=config_text,
        passed=bool(result.get('passed', False)),
        error_message=result.get('error'),
        report=report,
        artifacts=result.get('artifacts', []),
        execution_time=execution_time,
    )
    for check in report.get('checks', []):
        value = check.get('value')
        run.checks.append(CheckRecord(
            name=check['name'],
            value=_finite_or_none(value) if isinstance(value, (int, float)) else None,
            tolerance=check.get('tolerance'),
            passed=bool(check.get('passed')),
            note=check.get('note', ''),
        ))

    db.session.add(run)
    db.session.commit()
    return run
