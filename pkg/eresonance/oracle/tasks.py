# oracle/tasks.py
import logging
from celery import shared_task

from core.exceptions import DomainError, NumericError
from .services import scan_point

logger = logging.getLogger('eresonance.tasks')


@shared_task(bind=True, max_retries=3)
def scan_point_task(self, alpha: float, nu: float, N: int, wall_energy_ratio: float,
                    policy: str = 'fixed-spacing'):
    """Background task evaluating one resonance-scan point"""

    try:
        logger.info(f"Starting scan point alpha={alpha}, nu={nu}")
        row = scan_point(alpha, nu, N, wall_energy_ratio, policy, strict=True)
        logger.info(f"Finished scan point alpha={alpha}: status {row.status}")
        return row.model_dump()

    except DomainError as e:
        # bad input does not improve on retry
        logger.error(f"Scan point alpha={alpha} rejected: {e}")
        raise

    except NumericError as e:
        logger.error(f"Task error for scan point alpha={alpha}: {str(e)}")

        if self.request.retries < self.max_retries:
            logger.info(f"Retrying scan point alpha={alpha}, attempt {self.request.retries + 1}")
            raise self.retry(countdown=10 * (self.request.retries + 1), exc=e)
        raise
