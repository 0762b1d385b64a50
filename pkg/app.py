#!/usr/bin/env python3
"""
Critical Tori Run Service
A Flask JSON API that runs pipeline subcommands and keeps their history.
"""

from flask import Flask, request, jsonify
import os
import tempfile
import time
import uuid

from config import PipelineConfig, apply_overrides, parse_config_text
from critical_profiles import el_residual
from errors import ConfigError, CriticalToriError
from models import VerificationRun, db, get_recent_runs, get_run_stats, init_db, save_run
from pipeline import SUBCOMMANDS, merged_tolerances, build_profile, profile_report, run

# Keys accepted by POST /profile
PROFILE_KEYS = ('energy', 'lambda', 'q', 'epsilon', 'rho', 'd', 'm', 'n', 'n_samples')


def create_app(database_url=None):
    """
    Build the service.

    Args:
        database_url (str): SQLAlchemy URL; falls back to DATABASE_URL, then in-memory SQLite

    Returns:
        Flask: Configured application with tables created
    """
    app = Flask(__name__)

    database_url = database_url or os.environ.get('DATABASE_URL')
    if database_url:
        app.config['SQLALCHEMY_DATABASE_URI'] = database_url
        app.config['SQLALCHEMY_ENGINE_OPTIONS'] = {
            'pool_recycle': 300,
            'pool_pre_ping': True,
        }
    else:
        app.logger.warning("DATABASE_URL not found, using an in-memory SQLite database")
        app.config['SQLALCHEMY_DATABASE_URI'] = 'sqlite://'
    app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
    app.config['OUTPUT_ROOT'] = os.environ.get('CRITICAL_TORI_SERVICE_OUTPUT',
                                               os.path.join(tempfile.gettempdir(), 'critical-tori'))
    app.secret_key = os.environ.get('FLASK_SECRET_KEY', 'critical-tori-secret-key')

    init_db(app)
    register_routes(app)
    return app


def error_response(error, status=400):
    body = {'success': False, 'error': str(error), 'error_type': error.__class__.__name__}
    if isinstance(error, ConfigError):
        body['line'] = error.line
        body['column'] = error.column
    return jsonify(body), status


def register_routes(app):
    @app.route('/profile', methods=['POST'])
    def build_profile_route():
        """Build a profile from JSON parameters and report its checks."""
        data = request.get_json(silent=True) or {}
        unknown = sorted(set(data) - set(PROFILE_KEYS))
        if unknown:
            return jsonify({'success': False, 'error': f"unknown parameters: {', '.join(unknown)}"}), 400
        try:
            config = apply_overrides(PipelineConfig(), {key: str(value) for key, value in data.items()})
            config.validate()
            profile = build_profile(config)
            report = profile_report(profile, merged_tolerances(config))
        except ConfigError as e:
            return error_response(e, 400)
        except CriticalToriError as e:
            return error_response(e, 422)

        app.logger.info("profile %s d=%g: %s", profile.spec.label, profile.d,
                        'PASS' if report.passed else 'FAIL')
        return jsonify({
            'success': True,
            'passed': report.passed,
            'report': report.to_dict(),
            'summary': {
                'energy': profile.spec.label,
                'rho': profile.rho,
                'd': profile.d,
                'period': profile.period,
                'kappa_min': float(profile.kappa.min()),
                'kappa_max': float(profile.kappa.max()),
                'el_residual': el_residual(profile),
                'closed_form': profile.closed_form,
            },
        })

    @app.route('/runs', methods=['POST'])
    def create_run():
        """Run a subcommand on a key-value config text and store the result."""
        data = request.get_json(silent=True) or {}
        subcommand = data.get('subcommand', 'stages')
        config_text = data.get('config', '')
        if subcommand not in SUBCOMMANDS and subcommand != 'stages':
            return jsonify({'success': False, 'error': f"unknown subcommand '{subcommand}'"}), 400

        start_time = time.time()
        config = None
        try:
            config = parse_config_text(config_text)
            # Each run writes below its own directory, also under CRITICAL_TORI_OUTPUT_DIR
            config.output_dir = app.config['OUTPUT_ROOT']
            config.run_subdir = f"run-{time.time_ns()}-{uuid.uuid4().hex[:8]}"
            result = run(subcommand, config)
            outcome = {'passed': result.passed, 'report': result.report.to_dict(),
                       'artifacts': result.artifacts}
            status = 201
        except ConfigError as e:
            return error_response(e, 400)
        except CriticalToriError as e:
            outcome = {'passed': False, 'error': str(e), 'report': {}, 'artifacts': []}
            status = 422
        except Exception as e:
            app.logger.exception("run (%s) raised", subcommand)
            outcome = {'passed': False, 'error': f"Unexpected error: {str(e)}", 'report': {}, 'artifacts': []}
            status = 500
        execution_time = time.time() - start_time

        stored_config = config.to_text() if config is not None else config_text
        record = save_run(subcommand, stored_config, outcome, execution_time)
        app.logger.info("run %d (%s): %s in %.2fs", record.id, subcommand,
                        'PASS' if record.passed else 'FAIL', execution_time)
        body = record.to_dict()
        body['success'] = status == 201
        return jsonify(body), status

    @app.route('/runs', methods=['GET'])
    def list_runs():
        """Recent runs without their full reports."""
        limit = request.args.get('limit', 20, type=int)
        return jsonify([r.to_dict(include_report=False) for r in get_recent_runs(limit)])

    @app.route('/runs/<int:run_id>', methods=['GET'])
    def get_run(run_id):
        record = db.session.get(VerificationRun, run_id)
        if record is None:
            return jsonify({'error': f'run {run_id} not found'}), 404
        return jsonify(record.to_dict())

    @app.route('/stats')
    def get_stats():
        """Run counts and most frequently failing checks."""
        return jsonify(get_run_stats())


app = create_app()


if __name__ == '__main__':
    app.run(host='0.0.0.0', port=int(os.environ.get('PORT', 5000)), debug=False)
